"""Channel gain, SINR rate, load fixed point, and power model tests."""

import numpy as np
import pytest

from scnsim.netmodel import (
    MACRO,
    SMALL,
    BaseStation,
    ChannelModel,
    InactiveServerError,
    NetworkConfiguration,
    compute_loads,
    dbm_to_watt,
    exclusion_matrix,
    rate,
    rate_matrix,
    total_power,
    total_powers,
    watt_to_dbm,
)


def make_bs(bs_id=0, kind=SMALL, pos=(0.0, 0.0), p_max=1.0, p_idle=0.1,
            scale=1.1, never_sleeps=False):
    return BaseStation(id=bs_id, kind=kind, position=pos, p_max=p_max,
                       p_idle=p_idle, idle_scale_active=scale,
                       never_sleeps=never_sleeps)


def test_dbm_watt_conversions():
    assert dbm_to_watt(30.0) == pytest.approx(1.0, abs=1e-15)
    assert dbm_to_watt(46.0) == pytest.approx(39.810717055349734, rel=1e-14)
    assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-14)
    for w in (0.001, 0.1, 1.0, 39.8):
        assert dbm_to_watt(watt_to_dbm(w)) == pytest.approx(w, rel=1e-12)


def test_pathloss_reference_values():
    ch = ChannelModel()
    # at d = 1 km the log term vanishes and the offsets read off directly
    assert ch.pathloss_db(MACRO, 1000.0) == pytest.approx(128.1, abs=1e-12)
    assert ch.pathloss_db(SMALL, 1000.0) == pytest.approx(140.7, abs=1e-12)
    # one decade closer takes one slope off: 140.7 - 37.6 = 103.1
    assert ch.pathloss_db(SMALL, 100.0) == pytest.approx(103.1, abs=1e-12)
    assert ch.gain(MACRO, 1000.0) == pytest.approx(10 ** (-12.81), rel=1e-12)


def test_pathloss_minimum_distance_clamp():
    ch = ChannelModel()
    assert ch.pathloss_db(MACRO, 0.0) == ch.pathloss_db(MACRO, 35.0)
    assert ch.pathloss_db(SMALL, 0.0) == ch.pathloss_db(SMALL, 10.0)
    assert ch.pathloss_db(MACRO, 1.0) == ch.pathloss_db(MACRO, 35.0)
    # the clamp caps the gain at the min-distance value, inside (0, 1]
    rng = np.random.default_rng(7)
    d = rng.uniform(0.0, 5000.0, size=200)
    for kind in (MACRO, SMALL):
        g = ch.gain(kind, d)
        assert np.all(g > 0.0) and np.all(g <= 1.0)


def test_gain_monotone_in_distance():
    ch = ChannelModel()
    d = np.linspace(10.0, 3000.0, 300)
    for kind in (MACRO, SMALL):
        g = ch.gain(kind, d)
        assert np.all(np.diff(g) <= 0.0)


def test_gain_matrix_against_scalar():
    ch = ChannelModel()
    stations = [make_bs(0, MACRO, (0.0, 0.0)), make_bs(1, SMALL, (100.0, 0.0))]
    pts = np.array([[30.0, 40.0], [500.0, 0.0]])
    mat = ch.gain_matrix(stations, pts)
    assert mat.shape == (2, 2)
    assert mat[0, 0] == pytest.approx(ch.gain(MACRO, 50.0))
    assert mat[1, 1] == pytest.approx(ch.gain(SMALL, 400.0))


def test_base_station_validation():
    with pytest.raises(ValueError):
        make_bs(scale=1.0)
    with pytest.raises(ValueError):
        make_bs(p_idle=1.0, p_max=1.0)
    with pytest.raises(ValueError):
        make_bs(kind="pico")


def test_rate_snr_one_identity():
    # single BS, gain tuned so P * h equals the noise power: R = bw * log2(2)
    ch = ChannelModel()
    stations = [make_bs(0)]
    cfg = NetworkConfiguration.all_active(stations)
    gains = np.array([[ch.noise_w / 1.0]])
    r = rate_matrix(stations, cfg, gains, ch, exclusion_matrix(1, None))
    assert r[0, 0] == pytest.approx(ch.bandwidth_hz, rel=1e-12)


def test_rate_two_bs_interference():
    # serving P*h = 10 noise, interferer duty-cycled power rho*P*h = 4 noise:
    # SINR = 10 / (4 + 1) = 2, R = bw * log2(3)
    ch = ChannelModel()
    stations = [make_bs(0), make_bs(1, pos=(50.0, 0.0))]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.load = np.array([0.0, 0.8])
    gains = np.array([[10.0 * ch.noise_w], [4.0 * ch.noise_w / 0.8]])
    r = rate_matrix(stations, cfg, gains, ch, exclusion_matrix(2, None))
    assert r[0, 0] == pytest.approx(ch.bandwidth_hz * np.log2(3.0), rel=1e-12)


def test_rate_same_cluster_orthogonalized():
    # the same interferer inside the serving BS's cluster stops counting:
    # SINR = 10, R = bw * log2(11)
    ch = ChannelModel()
    stations = [make_bs(0), make_bs(1, pos=(50.0, 0.0))]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.load = np.array([0.0, 0.8])
    gains = np.array([[10.0 * ch.noise_w], [4.0 * ch.noise_w / 0.8]])
    r = rate_matrix(stations, cfg, gains, ch, exclusion_matrix(2, [(0, 1)]))
    expected = ch.bandwidth_hz * np.log2(11.0)
    assert r[0, 0] == pytest.approx(expected, rel=1e-12)
    # a sleeping interferer is equally silent, cluster or not
    cfg.state = np.array([1, 0])
    r = rate_matrix(stations, cfg, gains, ch, exclusion_matrix(2, None))
    assert r[0, 0] == pytest.approx(expected, rel=1e-12)


def test_rate_requires_active_server():
    ch = ChannelModel()
    stations = [make_bs(0, MACRO, (0.0, 0.0), p_max=39.8, p_idle=1.0),
                make_bs(1, SMALL, (200.0, 0.0))]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.state = np.array([1, 0])
    with pytest.raises(InactiveServerError):
        rate((190.0, 0.0), 1, stations, ch, cfg)
    # the active macro still serves
    assert rate((190.0, 0.0), 0, stations, ch, cfg) > 0.0


def test_rate_matrix_matches_scalar_rate():
    ch = ChannelModel()
    rng = np.random.default_rng(11)
    for _ in range(10):
        stations = [
            make_bs(0, MACRO, (500.0, 500.0), p_max=39.8, p_idle=1.0,
                    never_sleeps=True),
            make_bs(1, SMALL, tuple(rng.uniform(0, 1000, 2))),
            make_bs(2, SMALL, tuple(rng.uniform(0, 1000, 2))),
        ]
        pts = rng.uniform(0, 1000, size=(4, 2))
        cfg = NetworkConfiguration.all_active(stations)
        cfg.load = rng.uniform(0, 1, size=3)
        cfg.state = np.array([1, 1, rng.integers(0, 2)])
        clusters = [(1, 2)]
        gains = ch.gain_matrix(stations, pts)
        mat = rate_matrix(stations, cfg, gains, ch,
                          exclusion_matrix(3, clusters))
        for b in range(3):
            if cfg.state[b] == 0:
                continue
            for m in range(4):
                got = rate(tuple(pts[m]), b, stations, ch, cfg, clusters)
                assert got == pytest.approx(mat[b, m], rel=1e-12)


def test_rate_monotonicity():
    ch = ChannelModel()
    stations = [make_bs(0), make_bs(1, pos=(80.0, 0.0))]
    gains = np.array([[3e-13], [1e-13]])
    excl = exclusion_matrix(2, None)

    def rate_at(p_serve, rho_interf):
        cfg = NetworkConfiguration.all_active(stations)
        cfg.power = np.array([p_serve, 1.0])
        cfg.load = np.array([0.0, rho_interf])
        return rate_matrix(stations, cfg, gains, ch, excl)[0, 0]

    powers = np.linspace(0.1, 1.0, 8)
    rates = [rate_at(p, 0.5) for p in powers]
    assert np.all(np.diff(rates) >= 0.0)
    loads = np.linspace(0.0, 1.0, 8)
    rates = [rate_at(1.0, rho) for rho in loads]
    assert np.all(np.diff(rates) <= 0.0)


def test_loads_empty_and_single_ue():
    ch = ChannelModel()
    stations = [make_bs(0)]
    cfg = NetworkConfiguration.all_active(stations)
    res = compute_loads(stations, ch, np.zeros((1, 0)), cfg,
                        np.zeros((1, 0)), np.zeros(0))
    assert res.converged and res.load[0] == 0.0 and res.load_raw[0] == 0.0

    # gain tuned for R = 1.8 Mbit/s; 180 kbit/s of demand then loads it to 0.1
    sinr = 2.0 ** 0.18 - 1.0
    gains = np.array([[sinr * ch.noise_w]])
    res = compute_loads(stations, ch, gains, cfg, np.ones((1, 1)),
                        np.array([180e3]))
    assert res.converged
    assert res.load[0] == pytest.approx(0.1, abs=1e-5)
    assert res.load_raw[0] == pytest.approx(0.1, abs=1e-5)


def test_loads_symmetric_pair():
    ch = ChannelModel()
    stations = [make_bs(0), make_bs(1, pos=(300.0, 0.0))]
    cfg = NetworkConfiguration.all_active(stations)
    gains = np.array([[2e-12, 4e-14], [4e-14, 2e-12]])
    assignment = np.eye(2)
    traffic = np.array([5e5, 5e5])
    res = compute_loads(stations, ch, gains, cfg, assignment, traffic)
    assert res.converged
    assert res.load[0] == pytest.approx(res.load[1], rel=1e-9)
    assert 0.0 < res.load[0] < 1.0


def test_load_locality_single_sweep():
    # with interference frozen, moving a UE between BSs a and b cannot
    # change the load of a third BS c
    ch = ChannelModel()
    stations = [make_bs(i, pos=(200.0 * i, 0.0)) for i in range(3)]
    cfg = NetworkConfiguration.all_active(stations)
    rng = np.random.default_rng(3)
    gains = rng.uniform(1e-14, 1e-12, size=(3, 4))
    traffic = rng.uniform(1e5, 5e5, size=4)
    frozen = np.array([0.3, 0.2, 0.1])

    z1 = np.zeros((3, 4)); z1[0, 0] = z1[0, 1] = z1[1, 2] = z1[2, 3] = 1.0
    z2 = z1.copy(); z2[0, 1] = 0.0; z2[1, 1] = 1.0  # UE 1 moves a -> b
    res1 = compute_loads(stations, ch, gains, cfg, z1, traffic,
                         gamma=1.0, max_iter=1, init=frozen)
    res2 = compute_loads(stations, ch, gains, cfg, z2, traffic,
                         gamma=1.0, max_iter=1, init=frozen)
    assert res1.load_raw[2] == res2.load_raw[2]
    assert res2.load_raw[1] > res1.load_raw[1]


def test_load_fixed_point_identity():
    # a converged load vector reproduces itself through one frozen sweep
    ch = ChannelModel()
    rng = np.random.default_rng(5)
    stations = [make_bs(i, pos=tuple(rng.uniform(0, 500, 2))) for i in range(4)]
    gains = rng.uniform(1e-13, 5e-12, size=(4, 6))
    traffic = rng.uniform(1e5, 1e6, size=6)
    serving = rng.integers(0, 4, size=6)
    z = np.zeros((4, 6)); z[serving, np.arange(6)] = 1.0
    cfg = NetworkConfiguration.all_active(stations)

    res = compute_loads(stations, ch, gains, cfg, z, traffic, tol=1e-9)
    assert res.converged
    again = compute_loads(stations, ch, gains, cfg, z, traffic,
                          gamma=1.0, max_iter=1, init=res.load)
    assert np.max(np.abs(again.load - res.load)) < 1e-6


def test_compute_loads_rejects_sleeping_server():
    ch = ChannelModel()
    stations = [make_bs(0), make_bs(1, pos=(100.0, 0.0))]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.state = np.array([1, 0])
    z = np.zeros((2, 1)); z[1, 0] = 1.0
    with pytest.raises(InactiveServerError):
        compute_loads(stations, ch, np.full((2, 1), 1e-13), cfg, z,
                      np.array([1e5]))


def test_exclusion_matrix():
    excl = exclusion_matrix(4, [(1, 2)])
    assert np.array_equal(np.diag(excl), np.ones(4, dtype=bool))
    assert excl[1, 2] and excl[2, 1]
    assert not excl[0, 1] and not excl[3, 2]
    assert np.array_equal(exclusion_matrix(3, None), np.eye(3, dtype=bool))


def test_total_power_branches():
    bs = make_bs(p_max=1.0, p_idle=0.1, scale=1.1)
    assert total_power(bs, 0, 0.7) == pytest.approx(0.1, abs=1e-15)
    assert total_power(bs, 1, 0.0) == pytest.approx(0.11, abs=1e-15)
    # the two-term active draw: 0.5 * 1 + 1.1 * 0.1 = 0.61 W
    assert total_power(bs, 1, 0.5) == pytest.approx(0.61, abs=1e-12)
    assert total_power(bs, 1, 0.5, power=0.5) == pytest.approx(0.36, abs=1e-12)


def test_total_powers_vector_matches_scalar():
    rng = np.random.default_rng(9)
    stations = [make_bs(0, MACRO, (0.0, 0.0), p_max=39.8, p_idle=1.0),
                make_bs(1), make_bs(2, scale=2.0)]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.power = np.array([39.8, 0.7, 1.0])
    cfg.state = np.array([1, 0, 1])
    cfg.load = rng.uniform(0, 1, 3)
    vec = total_powers(stations, cfg)
    for i, bs in enumerate(stations):
        want = total_power(bs, int(cfg.state[i]), float(cfg.load[i]),
                           power=float(cfg.power[i]))
        assert vec[i] == pytest.approx(want, rel=1e-14)


def test_power_budget_flag():
    from scnsim.netmodel import power_budget_ok
    ok_bs = make_bs(0, p_max=1.0, p_idle=0.1, scale=1.1)
    hot_bs = make_bs(1, p_max=1.0, p_idle=0.6, scale=1.1)
    stations = [ok_bs, hot_bs]
    cfg = NetworkConfiguration.all_active(stations)
    cfg.load = np.array([1.0, 1.0])
    flags = power_budget_ok(stations, cfg)
    # full duty: 1.0 + 0.11 > 1 fails too; zero duty passes for both
    assert not flags[0] and not flags[1]
    cfg.load = np.array([0.0, 0.0])
    flags = power_budget_ok(stations, cfg)
    assert flags[0] and flags[1]
    cfg.load = np.array([0.5, 0.5])
    flags = power_budget_ok(stations, cfg)
    assert flags[0] and not flags[1]
