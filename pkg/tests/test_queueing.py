"""Queue sizing, exact finite-buffer chains, delay approximation, simulator."""

import json
import math

import numpy as np
import pytest

from swakit.distributions import ErlangDist, PhaseTypeDist, ph_from_mean_scv, validate_generator
from swakit.errors import ConfigError, InstabilityError, StateSpaceError
from swakit.queueing import (
    MeanScv,
    QueueModel,
    buffer_capacity,
    des_simulate,
    load_model,
    min_servers,
    model_from_dict,
    model_to_dict,
    predict,
    solve_batch_ph_ph_1_n,
    solve_ggc_approx,
    solve_infinite_servers,
    solve_ph_ph_1_n,
    storage_estimate,
)

EXP = lambda rate: ErlangDist(rate, 1)  # noqa: E731


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------


def mm1n_oracle(lam, mu, N):
    """Birth-death stationary solution of the single-server finite buffer."""
    rho = lam / mu
    if abs(rho - 1.0) < 1e-12:
        probs = np.full(N + 1, 1.0 / (N + 1))
    else:
        probs = rho ** np.arange(N + 1) * (1 - rho) / (1 - rho ** (N + 1))
    L = float(np.sum(np.arange(N + 1) * probs))
    Ploss = float(probs[N])
    lam_acc = lam * (1 - Ploss)
    W = L / lam_acc
    Lq = L - (1 - probs[0])
    Wq = W - 1.0 / mu
    return {"L": L, "Lq": Lq, "W": W, "Wq": Wq, "Pbusy": 1 - float(probs[0]),
            "Ploss": Ploss}


def mmc_oracle(lam, mu, c):
    """Textbook M/M/c delay indicators via factorial sums."""
    a = lam / mu
    rho = a / c
    p0 = 1.0 / (sum(a ** k / math.factorial(k) for k in range(c))
                + a ** c / (math.factorial(c) * (1 - rho)))
    pwait = a ** c / (math.factorial(c) * (1 - rho)) * p0
    Wq = pwait / (c * mu - lam)
    W = Wq + 1 / mu
    return {"Wq": Wq, "W": W, "L": lam * W, "Lq": lam * Wq, "Pbusy": pwait}


def close(x, y, tol=1e-9):
    return x == pytest.approx(y, abs=tol, rel=tol)


# ---------------------------------------------------------------------------
# sizing helpers
# ---------------------------------------------------------------------------


def test_buffer_capacity_values():
    assert buffer_capacity(10, 1024, 135) == 70
    assert buffer_capacity(4000, 4096, 135) == 120_000
    assert buffer_capacity(2, 100, 135) == 0  # page too small for one tuple
    with pytest.raises(ConfigError):
        buffer_capacity(0, 1024, 135)


def test_storage_estimate():
    assert storage_estimate(2119, 13, 135) == 2119 * 13 * 135
    with pytest.raises(ConfigError):
        storage_estimate(0, 13, 135)


def test_min_servers():
    assert min_servers(1.0 / 9.7780, 1.0 / 20713.7) == 2119
    assert min_servers(1.0, 1.0) == 2
    assert min_servers(0.4, 1.0) == 1
    with pytest.raises(ConfigError):
        min_servers(-1.0, 2.0)


# ---------------------------------------------------------------------------
# exact single-service chain
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("lam,mu,N", [(1.0, 2.0, 10), (0.9, 1.0, 25), (2.0, 1.0, 8)])
def test_exact_chain_matches_birth_death(lam, mu, N):
    got = solve_ph_ph_1_n(QueueModel(EXP(lam), EXP(mu), buffer=N))
    want = mm1n_oracle(lam, mu, N)
    for name in ("L", "Lq", "W", "Wq", "Pbusy", "Ploss"):
        assert close(getattr(got, name), want[name]), name


def test_exact_chain_near_unbounded_limit():
    got = solve_ph_ph_1_n(QueueModel(EXP(1.0), EXP(2.0), buffer=500))
    assert abs(got.L - 1.0) < 1e-6  # rho/(1-rho) with rho = 0.5
    assert got.Ploss < 1e-10


def test_loss_probability_decreases_with_buffer():
    losses = [
        solve_ph_ph_1_n(QueueModel(EXP(0.7), EXP(1.0), buffer=N)).Ploss
        for N in (5, 10, 20, 40)
    ]
    assert all(a > b for a, b in zip(losses, losses[1:]))


def grid_cases():
    """Mixed arrival/service laws for the flow-balance sweep."""
    m1 = EXP(1.0)
    e2 = ErlangDist(2.0, 2)
    h2 = ph_from_mean_scv(1.0, 4.0)
    p6 = validate_generator(
        PhaseTypeDist([1.0, 0.0], [[-1.1215, 0.0001], [0.0, -0.0021]]),
        policy="repair",
    )[0]
    m5 = EXP(2.0)
    e3 = ErlangDist(10.0, 3)
    hs = ph_from_mean_scv(0.4, 3.0)
    single = [
        QueueModel(arr, svc, buffer=7)
        for arr in (m1, e2, h2, p6)
        for svc in (m5, e3, hs)
    ]
    batch = [
        QueueModel(arr, svc, buffer=12, batch=(3, 3))
        for arr in (m1, e2, h2, p6)
        for svc in (m5, hs)
    ]
    return single, batch


def test_flow_balance_over_mixed_grid():
    single, batch = grid_cases()
    worst = 0.0
    for model in single:
        r = solve_ph_ph_1_n(model)
        lam_acc = (1.0 / model.arrival.mean()) * (1.0 - r.Ploss)
        worst = max(worst, abs(r.Lq - lam_acc * r.Wq))
        assert 0.0 <= r.Ploss <= 1.0 and 0.0 <= r.Pbusy <= 1.0
        assert r.Lq <= r.L <= model.buffer + 1e-12
    for model in batch:
        r = solve_batch_ph_ph_1_n(model)
        lam_acc = (1.0 / model.arrival.mean()) * (1.0 - r.Ploss)
        worst = max(worst, abs(r.L - lam_acc * r.W))
        assert 0.0 <= r.Ploss <= 1.0
        assert r.Lq <= r.L
    assert worst < 1e-6


def test_batch_of_one_equals_single():
    for arr, svc in [(EXP(1.0), EXP(2.0)),
                     (validate_generator(
                         PhaseTypeDist([1.0, 0.0],
                                       [[-1.1215, 0.0001], [0.0, -0.0021]]),
                         policy="repair")[0],
                      ErlangDist(10.0, 3))]:
        a = solve_ph_ph_1_n(QueueModel(arr, svc, buffer=9))
        b = solve_batch_ph_ph_1_n(QueueModel(arr, svc, buffer=9, batch=(1, 1)))
        for name in ("L", "Lq", "W", "Wq", "Pbusy", "Ploss"):
            assert close(getattr(a, name), getattr(b, name)), name


def test_batch_chain_agrees_with_simulation():
    model = QueueModel(EXP(1.0), EXP(5.0), buffer=12, batch=(3, 3))
    exact = solve_batch_ph_ph_1_n(model)
    sim = des_simulate(model, arrivals=400_000, seed=11)
    assert exact.L == pytest.approx(sim.L, rel=0.02)
    assert exact.W == pytest.approx(sim.W, rel=0.02)


def test_state_space_guard():
    big = ErlangDist(1.0, 10).as_phase_type()
    with pytest.raises(StateSpaceError):
        solve_ph_ph_1_n(QueueModel(big, big, buffer=2000))


def test_exact_chain_validates_model():
    with pytest.raises(ConfigError):
        solve_ph_ph_1_n(QueueModel(EXP(1.0), EXP(2.0), buffer=None))
    with pytest.raises(ConfigError):
        QueueModel(EXP(1.0), EXP(2.0), servers=2, batch=(3, 3))
    with pytest.raises(ConfigError):
        QueueModel(EXP(1.0), EXP(2.0), buffer=2, batch=(3, 3))
    with pytest.raises(ConfigError):
        QueueModel(EXP(1.0), EXP(2.0), batch=(4, 2))


# ---------------------------------------------------------------------------
# delay approximation
# ---------------------------------------------------------------------------


def test_ggc_reduces_to_mmc():
    got = solve_ggc_approx(2.0, 1.0, 1.0, 1.0, 3)
    want = mmc_oracle(2.0, 1.0, 3)
    for name in ("L", "Lq", "W", "Wq", "Pbusy"):
        assert close(getattr(got, name), want[name]), name


def test_gg1_reduces_to_mm1():
    lam, mu = 0.5, 1.0
    got = solve_ggc_approx(lam, 1.0, 1.0 / mu, 1.0, 1)
    assert close(got.Wq, lam / (mu * (mu - lam)))


def test_deterministic_service_halves_wait():
    markov = solve_ggc_approx(0.5, 1.0, 1.0, 1.0, 1)
    determ = solve_ggc_approx(0.5, 1.0, 1.0, 0.0, 1)
    assert determ.Wq == pytest.approx(markov.Wq / 2)


def test_instability_suggests_servers():
    with pytest.raises(InstabilityError) as err:
        solve_ggc_approx(3.0, 1.0, 1.0, 1.0, 2)
    assert err.value.suggested_servers == 4


def test_full_scale_station_load():
    lam = 1.0 / 9.7780
    got = solve_ggc_approx(lam, 1.0, 20713.7, 1.0, 10_000)
    assert got.L == pytest.approx(lam * 20713.7, rel=1e-6)
    assert got.L == pytest.approx(2119.2972, rel=0.01)


def test_infinite_servers():
    r = solve_infinite_servers(2.0, 3.0)
    assert (r.L, r.Lq, r.W, r.Wq) == (6.0, 0.0, 3.0, 0.0)
    with pytest.raises(ConfigError):
        solve_infinite_servers(0.0, 1.0)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def test_predict_routes_by_model_shape():
    ample = predict(QueueModel(EXP(2.0), MeanScv(3.0, 1.0), servers="ample"))
    assert ample.W == 3.0 and ample.Lq == 0.0

    finite = predict(QueueModel(EXP(1.0), EXP(2.0), buffer=10))
    assert close(finite.L, mm1n_oracle(1.0, 2.0, 10)["L"])

    open_q = predict(QueueModel(EXP(0.5), EXP(1.0)))
    assert close(open_q.Wq, 0.5 / (1.0 * 0.5))

    with pytest.raises(ConfigError):
        predict(QueueModel(EXP(1.0), EXP(5.0), batch=(3, 3)))
    with pytest.raises(ConfigError):
        predict(QueueModel(EXP(1.0), EXP(5.0), servers=2, buffer=10))


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------


def test_simulator_agrees_with_mm1():
    # rho = 0.5: L = rho/(1-rho) = 1, W = 1/(mu - lambda) = 1
    r = des_simulate(QueueModel(EXP(1.0), EXP(2.0)), arrivals=1_000_000, seed=5)
    assert abs(r.L - 1.0) <= max(0.03, 2 * r.ci["L"])
    assert abs(r.W - 1.0) <= max(0.03, 2 * r.ci["W"])


def test_simulator_deterministic():
    model = QueueModel(EXP(1.0), EXP(2.0), buffer=10)
    a = des_simulate(model, arrivals=5_000, seed=42)
    b = des_simulate(model, arrivals=5_000, seed=42)
    assert a.to_dict() == b.to_dict()
    c = des_simulate(model, arrivals=5_000, seed=43)
    assert a.L != c.L


def test_simulator_input_validation():
    model = QueueModel(EXP(1.0), EXP(2.0))
    with pytest.raises(ConfigError):
        des_simulate(model, arrivals=50, seed=0)
    with pytest.raises(ConfigError):
        des_simulate(model, arrivals=1000, seed=0, warmup_frac=0.5)
    with pytest.raises(ConfigError):
        des_simulate(model, arrivals=1000, seed=0, n_batches=10)


def test_simulator_reports_ci():
    r = des_simulate(QueueModel(EXP(1.0), EXP(2.0), buffer=20), arrivals=20_000, seed=1)
    assert set(r.ci) >= {"L", "Lq", "W", "Wq"}
    assert all(v >= 0 for v in r.ci.values())
    assert r.to_dict()["ci95"]["L"] == r.ci["L"]


# ---------------------------------------------------------------------------
# model (de)serialization
# ---------------------------------------------------------------------------


def test_model_round_trip(tmp_path):
    model = QueueModel(
        ErlangDist(2.0, 2),
        MeanScv(0.5, 3.0),
        servers=1,
        buffer=60,
        batch=(20, 20),
    )
    doc = model_to_dict(model)
    assert doc["buffer"] == 60
    assert doc["batch"] == [20, 20]
    back = model_from_dict(json.loads(json.dumps(doc)))
    assert back.service == MeanScv(0.5, 3.0)
    assert back.batch == (20, 20)

    unbounded = QueueModel(EXP(1.0), EXP(2.0))
    doc2 = model_to_dict(unbounded)
    assert doc2["buffer"] == "unbounded"
    assert model_from_dict(doc2).buffer is None

    p = tmp_path / "model.json"
    p.write_text(json.dumps(doc))
    assert load_model(p).buffer == 60
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_model(p)


def test_model_from_dict_rejects_garbage():
    with pytest.raises(ConfigError):
        model_from_dict({"arrival": {"type": "erlang", "lambda": 1.0, "k": 1}})
    with pytest.raises(ConfigError):
        model_from_dict({"arrival": {"type": "erlang", "lambda": 1.0, "k": 1},
                         "service": {"what": 3}})
