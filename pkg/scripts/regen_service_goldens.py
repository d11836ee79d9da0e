#!/usr/bin/env python3
"""Regenerate the inference-service golden response files from the stub
backend. Run after any intentional change to the stub or the wire format."""
import sys
from pathlib import Path

from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).resolve().parents[1]
                       / "service" / "tests"))
from test_service import GOLDEN_PAIRS, GOLDEN_SENTENCES, canonical  # noqa: E402

from rirag_service import ServiceConfig, create_app  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "service" / "tests" / "data"


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    with TestClient(create_app(ServiceConfig(backend="stub"))) as client:
        nli = client.post("/v1/nli", json={"role": "matrix",
                                           "pairs": GOLDEN_PAIRS})
        nli.raise_for_status()
        (DATA / "golden_nli.json").write_text(canonical(nli.json()))
        obl = client.post("/v1/obligation",
                          json={"sentences": GOLDEN_SENTENCES})
        obl.raise_for_status()
        (DATA / "golden_obligation.json").write_text(canonical(obl.json()))
    print(f"wrote {DATA / 'golden_nli.json'}")
    print(f"wrote {DATA / 'golden_obligation.json'}")


if __name__ == "__main__":
    main()
