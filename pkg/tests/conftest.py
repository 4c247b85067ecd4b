import hashlib
import json

import numpy as np
import pytest

from diffsteg import TinyDenoiser, TrainConfig, build_linear_schedule, synth_dataset, train

# the reference toy model used by the slow and acceptance tests
TOY = dict(dims=(1, 16, 16), T=1000, steps=20_000, seed=1, dataset="blobs", count=2000, grain=0.3)


@pytest.fixture(scope="session")
def schedule():
    return build_linear_schedule(1000)


def _train_toy(schedule):
    data = synth_dataset(TOY["dataset"], TOY["count"], TOY["dims"], seed=TOY["seed"], grain=TOY["grain"])
    model = TinyDenoiser(TOY["dims"], schedule, seed=TOY["seed"])
    report = train(model, data, TrainConfig(steps=TOY["steps"], seed=TOY["seed"]), schedule)
    return model, report


@pytest.fixture(scope="session")
def toy_model(request, schedule):
    """20k-step toy denoiser. Training is deterministic, so the weights are
    cached in the pytest cache keyed by the training recipe."""
    key = hashlib.sha256(json.dumps(TOY, sort_keys=True).encode()).hexdigest()[:16]
    cache_dir = request.config.cache.mkdir("diffsteg-toy")
    path = cache_dir / f"toy-{key}.gsdw"
    losses_path = cache_dir / f"toy-{key}.losses.json"
    if path.exists() and losses_path.exists():
        model = TinyDenoiser.load(path, schedule)
        losses = json.loads(losses_path.read_text())
    else:
        model, report = _train_toy(schedule)
        model.save(path)
        losses = report.losses
        losses_path.write_text(json.dumps(losses))
    model.train_losses = losses
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: dict[int, tuple[str, bool, str]] = {}
N_CRITERIA = 10


@pytest.fixture
def record_criterion():
    """Record one acceptance result; the summary prints one line per criterion."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (title, bool(passed), detail)
        print(f"CRITERION {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in _CRITERIA:
            title, ok, detail = _CRITERIA[n]
            tr.write_line(f"CRITERION {n:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail}")
        else:
            tr.write_line(f"CRITERION {n:2d} FAIL: not evaluated (test did not run or errored early)")
