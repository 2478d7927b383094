"""Smoke test for the `quard` extension module.

Build and install first:  maturin develop --release  (or pip install .)
Then run:                 python python/smoke_test.py
"""

import tempfile
from pathlib import Path

import quard


def main() -> None:
    space = quard.ActionSpace()
    tokens = space.tokenize([0.4, 0.0, 0.0, 0.0, 0.5, 0.0, 2.0, 0.25, 0.0, 0.0, 0.08], False)
    values, stop = space.detokenize(tokens)
    assert len(tokens) == 12 and not stop
    print(f"tokens {tokens} -> v_x {values[0]:.3f}")

    spec = quard.seen_tasks("unload")[0]
    text = quard.render_instruction(spec)
    assert quard.parse_instruction(text) == spec
    episode = quard.generate_episode(spec, 11)
    print(f"{text!r}: {len(episode['steps'])} steps, {episode['outcome']['status']}")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "store"
        written = quard.collect(str(out), 5, skills=["go_to", "go_avoid"], count=4)
        store = quard.Store.open(str(out))
        assert written == len(store) == 8
        print(store.stats_table())
        report = quard.evaluate("knn:" + str(out), "go_to_10", 5, k=1)
        print(f"knn on go_to_10: SR {report['overall_success_rate']:.2f}")

    oracle = quard.evaluate("oracle", "go_to_20", 5)
    assert oracle["overall_success_rate"] >= 0.9, oracle["overall_success_rate"]
    print(f"oracle on go_to_20: SR {oracle['overall_success_rate']:.2f}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
