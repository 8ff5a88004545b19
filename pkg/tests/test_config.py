import pytest
from hypothesis import given
from hypothesis import strategies as st

from maxwell_ddm_nn import InvalidArgumentError
from maxwell_ddm_nn.config import RunConfig, load_config, parse_config, parse_schedule, serialize_config
from maxwell_ddm_nn.neural import Activation


def test_defaults():
    cfg = RunConfig()
    assert cfg.order.n_local == 40
    assert cfg.params.wavelength == pytest.approx(3.0)
    tc = cfg.train_config()
    assert tc.max_iter == 60000 and tc.schedule == ((1e-5, 50000), (1e-6, 10000))


def test_schedule_parsing():
    assert parse_schedule("1e-5:50000, 1e-6:10000") == ((1e-5, 50000), (1e-6, 10000))
    for bad in ("", "1e-5", "a:b", "1:2:3"):
        with pytest.raises(InvalidArgumentError):
            parse_schedule(bad)


def test_unknown_section_and_key():
    with pytest.raises(InvalidArgumentError):
        parse_config("[bogus]\nx = 1\n")
    with pytest.raises(InvalidArgumentError):
        parse_config("[mesh]\nsize = 4\n")
    with pytest.raises(InvalidArgumentError):
        parse_config("[mesh]\nn = four\n")
    with pytest.raises(InvalidArgumentError):
        parse_config("no section\n")
    with pytest.raises(ValueError):
        parse_config("[train]\nactivation = swish\n")


def test_partial_config():
    cfg = parse_config("# comment\n[material]\nwavelength = 2.9\n")
    assert cfg.wavelength == 2.9 and cfg.n == 32


@given(
    n=st.integers(1, 64),
    wl=st.floats(0.5, 10.0),
    act=st.sampled_from([a.value for a in Activation]),
    sched=st.lists(st.tuples(st.floats(1e-8, 1.0), st.integers(1, 10**6)), min_size=1, max_size=3),
    out=st.text(alphabet="abcxyz/_-", min_size=1, max_size=12),
)
def test_roundtrip(n, wl, act, sched, out):
    cfg = RunConfig(n=n, wavelength=wl, activation=act, schedule=tuple(sched), dir=out)
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("name", [
    "example1_trained_wavenumber.ini",
    "example2_omega_pi.ini",
    "example3_wavelength_2.9.ini",
    "example4_wavelength_3.1.ini",
    "activations_sigmoid_vs_relu.ini",
])
def test_shipped_configs_load(name):
    from pathlib import Path

    cfg = load_config(Path(__file__).parent.parent / "configs" / name)
    assert cfg.n == 32
