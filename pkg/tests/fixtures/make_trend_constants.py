"""Archive the empirical trend constants of the default configuration.

Run from the repository root: python tests/fixtures/make_trend_constants.py
"""
import json
import tempfile
from pathlib import Path

from adslab import pipeline as P

if __name__ == "__main__":
    cfg = P.ExperimentConfig()
    with tempfile.TemporaryDirectory() as tmp:
        out = P.verify(cfg, tmp)
        data = json.loads((Path(tmp) / "constants.json").read_text())
    target = Path(__file__).parent / "trend_constants.json"
    target.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {target} (config {data['config_hash']}, ok={out.ok})")
