"""Smoke test for the dirng Python extension.

Build and install first, e.g.

    cd crates/py && maturin build --release -o dist && pip install dist/*.whl
"""

import math
import os

import dirng


def main():
    assert abs(dirng.instrumental_value(1.0) - (1 + 2 * math.sqrt(2))) < 1e-9
    assert abs(dirng.instrumental_value(0.9) - 0.9 * dirng.QUANTUM_MAX) < 1e-10

    p = dirng.born_probabilities(0.95)
    for block in p:
        assert abs(sum(sum(row) for row in block) - 1.0) < 1e-12

    value, maximizers = dirng.classical_max()
    assert value == 3.0 and len(maximizers) > 0

    assert abs(dirng.f_x(dirng.QUANTUM_MAX, 1) - 0.9869924983875644) < 1e-12

    eat = dirng.EatParams.reported_session()
    bound = eat.eta_opt()
    assert abs(bound["rate"] - 0.031125) / 0.031125 < 0.15, bound
    assert 0.1 <= eat.soundness(5270, 1e-6) < 0.2

    params = dirng.compute_params(344190, 5356, 1e-6)
    assert params["m"] == 5270 and params["l"] == 19, params

    source = os.urandom(512)
    small = dirng.compute_params(4096, 1000, 1e-4, "standard")
    seed = os.urandom((small["d"] + 7) // 8)
    out, nbits = dirng.extract(source, seed, 1000, 1e-4, "standard", seed_bits=small["d"])
    assert nbits == small["m"] and len(out) == (nbits + 7) // 8
    again, _ = dirng.extract(source, seed, 1000, 1e-4, "standard", seed_bits=small["d"])
    assert out == again

    assert dirng.bits_to_trits(bytes([0b00011011, 0b11000000]), 4) == [1, 2, 3, 1]

    try:
        dirng.compute_params(1000, 10, 1e-6)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for insufficient entropy")

    print("dirng python smoke test: ok")


if __name__ == "__main__":
    main()
