"""
A tour of the HTTP service, in process
======================================

Runs the whole annotation loop against a temporary data directory
without binding a port: queue pairs, label them, fit weights, fuse,
then restart and watch the state replay from the append-only logs.

Needs the dev extras (the in-process client): pip install -e ".[dev]"
"""

import json
import tempfile
import warnings
from pathlib import Path

# this environment's starlette warns about its own test-client shim
warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")

from fastapi.testclient import TestClient

from mosaiq.service import create_app, load_service_config

tmp = tempfile.TemporaryDirectory(prefix="mosaiq-demo-")
data_dir = Path(tmp.name)

# Seed the work queue: three pairs, each with stored score vectors so the
# service can fit weights later without a scoring backend.
with open(data_dir / "pair_queue.jsonl", "w", encoding="utf-8") as fh:
    for i in range(3):
        fh.write(json.dumps({
            "pair_id": f"p{i}",
            "image_a": f"https://images.example/a{i}.png",
            "image_b": f"https://images.example/b{i}.png",
            "scores_a": [4.0, 3.0, 3.5, 4.0],   # layout, harmony, lighting, distortion
            "scores_b": [3.0, 3.5, 3.0, 2.5],
        }) + "\n")

config = load_service_config(data_dir=str(data_dir), rng_seed=7)
client = TestClient(create_app(config))

print("health:", client.get("/v1/health").json())

# An annotator asks for work. The service picks the least-labeled pair and
# fixes which image goes on the left (deterministic per annotator+pair).
who = {"annotator": "pat"}
pair = client.get("/v1/pairs/next", params=who).json()["pair"]
print(f"serving {pair['pair_id']}: left slot shows image "
      f"{'A' if pair['left'] == 'a' else 'B'}")

# Label all three pairs: A wins twice, one tie.
for pair_id, label in [("p0", "A"), ("p1", "A"), ("p2", "Tie")]:
    resp = client.post("/v1/preferences", json={
        "pair_id": pair_id, "annotator_id": "pat", "label": label,
    })
    print(f"labeled {pair_id} -> {resp.json()}")

progress = client.get("/v1/pairs/next", params=who).json()["progress"]
print(f"progress: {progress['labeled']}/{progress['total']} (queue drained)")

# Fit fusion weights from the stored vectors and the fresh labels.
fit = client.post("/v1/fusion/fit", json={"l2": 0.001, "max_iters": 500}).json()
dims = ("layout", "harmony", "lighting", "distortion")
print("fitted:", {d: round(v, 4) for d, v in zip(dims, fit["w"])},
      "| pairs used:", fit["meta"]["pair_count_used"])

# Fuse a new image's scores through the service.
fused = client.post("/v1/fuse", json={
    "scores": {"layout": 4.5, "harmony": 3.2, "lighting": 4.0, "distortion": 3.8},
}).json()
print("fused score:", round(fused["fused"], 4))

# Everything above went into append-only logs. A fresh process pointed at
# the same directory replays them and lands in the identical state.
client2 = TestClient(create_app(load_service_config(data_dir=str(data_dir), rng_seed=7)))
print("after restart:", client2.get("/v1/health").json())
print("log files:", sorted(p.name for p in data_dir.glob("*.jsonl")))

tmp.cleanup()
