import pytest

from risbeam import config
from risbeam.config import ResolvedConfig, get_config, parse_overrides, resolve_config
from risbeam.errors import ValidationError
from risbeam.models import SystemConfig, system_config


def write_ini(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestProfiles:
    def test_environment_selects_profile(self, monkeypatch):
        assert get_config() is config.TestingConfig
        monkeypatch.setenv("RISBEAM_ENV", "full")
        assert get_config() is config.FullConfig
        monkeypatch.delenv("RISBEAM_ENV")
        assert get_config() is config.DeskConfig

    def test_explicit_name_wins(self):
        assert get_config("desk") is config.DeskConfig

    def test_unknown_profile(self):
        with pytest.raises(ValidationError):
            get_config("galaxy")

    def test_desk_defaults(self):
        resolved = resolve_config("desk")
        assert (resolved.system.M, resolved.system.N, resolved.system.K) == (4, 16, 2)
        assert resolved.system.sigma2_dBm == -80.0
        assert resolved.training.lr == 1e-3
        assert resolved.training.tau == 0.005


class TestResolution:
    def test_file_then_overrides(self, tmp_path):
        path = write_ini(tmp_path / "run.ini", "[system]\nN = 6\nK = 2\nq = 1.0, 2.0\n\n[training]\nlr = 0.01\nlr_floor = 0.001\n")
        resolved = resolve_config("testing", path, ["system.N=9", "lr=0.02"])
        assert resolved.system.N == 9
        assert (resolved.system.Nx, resolved.system.Ny) == (3, 3)
        assert resolved.system.q == (1.0, 2.0)
        assert resolved.training.lr == 0.02
        assert resolved.training.lr_floor == 0.001

    def test_weights_must_match_users(self, tmp_path):
        path = write_ini(tmp_path / "run.ini", "[system]\nK = 2\nq = 1.0\n")
        with pytest.raises(ValidationError):
            resolve_config("testing", path)

    def test_unknown_section(self, tmp_path):
        path = write_ini(tmp_path / "run.ini", "[plots]\nwidth = 3\n")
        with pytest.raises(ValidationError):
            resolve_config("testing", path)

    def test_bad_value(self, tmp_path):
        path = write_ini(tmp_path / "run.ini", "[training]\nbatch_size = many\n")
        with pytest.raises(ValidationError):
            resolve_config("testing", path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            resolve_config("testing", str(tmp_path / "nope.ini"))

    @pytest.mark.parametrize("item", ["seed=1", "nokey=2", "system.c=1", "N"])
    def test_bad_overrides(self, item):
        with pytest.raises(ValidationError):
            parse_overrides([item])

    def test_quantizer_c_reaches_training(self):
        assert resolve_config("testing", overrides=["c=4"]).training.c == 4.0

    @pytest.mark.parametrize("item", ["data.eta=-0.1", "sweep.axis=kappa", "sweep.mode=plot", "training.loss_kind=l2"])
    def test_invalid_settings(self, item):
        with pytest.raises(ValidationError):
            resolve_config("testing", overrides=[item])


class TestResolvedConfig:
    def test_round_trip(self):
        resolved = resolve_config("testing", overrides=["sweep.values=1,2", "data.eta=0.1"])
        again = ResolvedConfig.from_dict(resolved.to_dict())
        assert again == resolved

    def test_with_seed(self):
        resolved = resolve_config("testing").with_seed(42)
        assert resolved.data["seed"] == 42
        assert resolved.training.seed == 42

    def test_missing_section(self):
        data = resolve_config("testing").to_dict()
        del data["training"]
        with pytest.raises(ValidationError):
            ResolvedConfig.from_dict(data)


class TestSystemConfig:
    def test_linear_powers_are_converted_once(self, monkeypatch):
        system = SystemConfig(Pt_dBm=30.0, sigma2_dBm=0.0)
        monkeypatch.setattr(system_config, "dbm_to_watts", lambda dbm: pytest.fail("converted on access"))
        assert system.Pt == pytest.approx(1.0)
        assert system.sigma2 == pytest.approx(1e-3)

    def test_overrides_recompute_linear_powers(self):
        system = SystemConfig(Pt_dBm=30.0).with_overrides(Pt_dBm=20.0)
        assert system.Pt == pytest.approx(0.1)
        assert system == SystemConfig(Pt_dBm=20.0)
