"""
Two parties, one correlator, real sockets
=========================================

Alice and Bob each run their own half of the experiment and stream records
over TCP. The correlator merges them by bin index and writes the same CSV
as a single in-process run.
"""
import threading

from polcor import OpticalConfig, run_pipeline
from polcor.harness import CorrelatorServer, run_party
from polcor.measurement import correlation_csv

cfg = OpticalConfig(theta=0.3, xi=1.0, eta=0.2, n_bins=50_000, seed=9)

server = CorrelatorServer(cfg)
print("correlator listening on %s:%d" % server.address)
out = {}
corr = threading.Thread(target=lambda: out.update(result=server.serve_once()))
corr.start()
parties = [threading.Thread(target=run_party, args=(role, cfg, server.address)) for role in ("alice", "bob")]
for t in parties:
    t.start()
for t in parties + [corr]:
    t.join()

results, csv_text = out["result"]
for r in results:
    print(f"{r.pair.value}: est={r.estimate:.6f} closed={r.closed_form:.6f} pairs={r.n_pairs}")
print("identical to in-process CSV:", csv_text == correlation_csv(cfg, run_pipeline(cfg)))
