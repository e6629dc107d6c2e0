"""End-to-end tests of the command-line front end."""

import csv
import json
import logging

import pytest

from src.cli import commands
from src.cli.commands import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, run
from src.errors import NumericalError
from src.models import analytic_models as am

FAST = ['--draws', '2000', '--chunk-size', '500', '--seed', '11']


@pytest.fixture(autouse=True)
def restore_logging():
    """run() reconfigures the root logger; put the test session's handlers back."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_check_normal(capsys):
    assert run(['check', 'normal', '--y', '2.5'] + FAST) == EXIT_OK
    data = _json_out(capsys)
    assert data['tail'] == "upper"
    assert data['n_draws'] == 2000
    assert data['base_seed'] == 11
    assert data['analytic_p_value'] == pytest.approx(0.0771, abs=1e-4)
    assert abs(data['p_value'] - 0.0771) < 0.03


def test_invalid_parameter_exits_with_validation_status(capsys):
    assert run(['check', 'normal', '--tau0sq', '-1', '--y', '1.0'] + FAST) == EXIT_VALIDATION
    assert capsys.readouterr().err.startswith("error:")


def test_missing_observation(capsys):
    assert run(['check', 'normal'] + FAST) == EXIT_VALIDATION
    assert "--y" in capsys.readouterr().err


def test_unknown_preset(capsys):
    assert run(['check', 'normal', '--y', '1.0', '--preset', 'huge']) == EXIT_VALIDATION
    assert "unknown preset" in capsys.readouterr().err


def test_numerical_failure_exit_status(capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NumericalError("quadrature diverged")

    monkeypatch.setattr(am, "normal_check", fail)
    assert run(['check', 'normal', '--y', '1.0'] + FAST) == EXIT_NUMERICAL
    assert "numerical failure: quadrature diverged" in capsys.readouterr().err


def test_binomial_is_identical_across_worker_counts(capsys):
    base = ['check', 'binomial', '--n', '20', '--a', '2', '--b', '5', '--y', '3'] + FAST
    assert run(base + ['--workers', '1']) == EXIT_OK
    serial = _json_out(capsys)
    assert run(base + ['--workers', '3']) == EXIT_OK
    parallel = _json_out(capsys)
    assert serial['p_value'] == parallel['p_value']
    assert serial['tail'] == "lower"
    assert 0.0 < serial['exact_p_value'] <= 1.0


def test_nig_mean_shift(capsys):
    assert run(['check', 'nig', '--y', '-1', '0', '1', '--expansion', 'mean-shift'] + FAST) == EXIT_OK
    data = _json_out(capsys)
    assert data['tail'] == "two_sided"
    assert data['label'] == "nig_mean_shift"


def test_critical_values_refuse_small_draw_counts(capsys):
    assert run(['lasso', 'means-crit'] + FAST) == EXIT_VALIDATION
    assert "at least" in capsys.readouterr().err


def test_means_power_to_file(tmp_path):
    out = tmp_path / "power.csv"
    argv = ['lasso', 'means-power', '--n', '5', '--q-grid', '0.5', '1.0', '--reps', '25',
            '--draws', '500', '--chunk-size', '250', '--out', str(out)]
    assert run(argv) == EXIT_OK
    with open(out, newline='') as f:
        rows = list(csv.DictReader(f))
    assert [float(r['q']) for r in rows] == [0.5, 1.0]
    assert all(r['n'] == '5' and r['n_reps'] == '25' for r in rows)


def test_quantum_family_exact_method(capsys):
    assert run(['quantum', 'g2', '--y', '45', '3', '2', '--method', 'exact'] + FAST) == EXIT_OK
    data = _json_out(capsys)
    assert data['tail'] == "upper"
    assert data['expansion']['family'] == "g2_location_shift"


def test_quantum_physical_from_config(capsys):
    argv = ['quantum', 'physical', '--config', 'config/quantum_experiment.json',
            '--draws', '500', '--chunk-size', '250']
    assert run(argv) == EXIT_OK
    data = _json_out(capsys)
    assert set(data) == {"upper", "lower"}
    assert data['upper']['n_draws'] == 500
    assert data['upper']['expansion']['hyperparameters']['cos_sq_gamma0'] == pytest.approx(0.1327)


@pytest.mark.parametrize("target", sorted(commands.reproduce.TARGETS))
def test_describe_every_target(capsys, target):
    assert run(['reproduce', target, '--describe']) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith(f"{target}:")
    assert "expected:" in out


def test_fig1_is_the_score_histogram(capsys, tmp_path):
    assert run(['reproduce', 'fig1', '--describe']) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("score-histogram:")
    assert "(0.408, 1.117)" in out

    target = tmp_path / "hist.csv"
    assert run(['reproduce', 'fig1', '--draws', '2000', '--chunk-size', '500', '--out', str(target)]) == EXIT_OK
    with open(target, newline='') as f:
        header = next(csv.reader(f))
    assert header == ['bin_left', 'bin_right', 'density']


def test_reproduce_normal_example(capsys):
    assert run(['reproduce', 'normal-example', '--draws', '5000', '--chunk-size', '1000']) == EXIT_OK
    data = _json_out(capsys)
    assert data['n_draws'] == 5000
    assert data['analytic_p_value'] == pytest.approx(0.0771, abs=1e-4)


def test_flatten_study():
    flat = commands._flatten_study({"g1": {"g1": 1, "g2": 2}, "g2": {"g1": 3, "g2": 4}})
    assert flat == {"data_g1:g1": 1, "data_g1:g2": 2, "data_g2:g1": 3, "data_g2:g2": 4}
