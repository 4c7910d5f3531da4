import  re

import  numpy as np
import  pytest

import  multipathga
from    multipathga import error_fn, harness_cli
from    multipathga.config import load_config
from    multipathga.error import EXIT_CONFIG, EXIT_ESTIMATION, EXIT_IO, EXIT_OK
from    multipathga.harness_cli import main, read_csv, write_csv

SMALL_GA = ['--set', 'ga.population_size=10', '--set', 'ga.max_generations=5']


@pytest.fixture(autouse=True)
def setup(tmp_path):
    """ setup any state specific to the execution of the given module."""
    global out
    out = tmp_path
    yield


def _column(path, index=1):
    _, _, rows = read_csv(path)
    return np.array([float(row[index]) for row in rows])


def test_csv_round_trip():
    config = load_config()
    values = np.random.default_rng(8).standard_normal(50) * 10.0 ** np.arange(-25, 25)
    path = out / 'values.csv'
    write_csv(path, ['index', 'value'], enumerate(values), config, note='round trip')

    metadata, header, rows = read_csv(path)
    assert header == ['index', 'value']
    assert [float(row[1]) for row in rows] == values.tolist()
    assert [int(row[0]) for row in rows] == list(range(50))
    assert metadata['master_seed'] == '1'
    assert metadata['config_hash'] == config.digest
    assert metadata['note'] == 'round trip'
    assert f'multipathga {multipathga.__version__}' in metadata


def test_fmt():
    assert harness_cli.fmt(True) == 'true'
    assert harness_cli.fmt(np.int64(3)) == '3'
    assert harness_cli.fmt(0.1) == '0.10000000000000001'
    assert harness_cli.fmt('a1') == 'a1'


def test_synth_default(capsys):
    assert main(['synth', '--out', str(out / 'synth')]) == EXIT_OK

    received = _column(out / 'synth' / 'received.csv')
    assert received.size == 1000
    assert np.all(received[:200] == 0)
    assert np.any(received[200:] != 0)
    assert _column(out / 'synth' / 'pulse.csv').size == 750

    metadata, header, rows = read_csv(out / 'synth' / 'channel.csv')
    assert header == ['path', 'amplitude', 'delay']
    assert [float(row[2]) for row in rows] == [200.0, 204.0, 220.0]
    assert metadata['master_seed'] == '1'

    assert 'record power' in capsys.readouterr().out


def test_synth_noiseless_is_bit_identical():
    assert main(['synth', '--out', str(out / 'first')]) == EXIT_OK
    assert main(['synth', '--out', str(out / 'second')]) == EXIT_OK

    assert (out / 'first' / 'received.csv').read_bytes() == (out / 'second' / 'received.csv').read_bytes()


def test_synth_reports_empirical_snr(capsys):
    assert main(['synth', '--out', str(out / 'noisy'), '--set', 'noise.snr_db=0', '--seed', '3']) == EXIT_OK

    printed = re.search(r'empirical SNR: (\S+) dB', capsys.readouterr().out)
    assert float(printed.group(1)) == pytest.approx(0.0, abs=0.5)

    noisy = _column(out / 'noisy' / 'received.csv')
    clean = _column(out / 'noisy' / 'noiseless.csv')
    assert 10 * np.log10(np.mean(clean ** 2) / np.mean((noisy - clean) ** 2)) == pytest.approx(float(printed.group(1)),
                                                                                               abs=1e-3)


def test_synth_seed_changes_noise():
    for seed in ('3', '4'):
        assert main(['synth', '--out', str(out / seed), '--set', 'noise.snr_db=10', '--seed', seed]) == EXIT_OK

    assert not np.array_equal(_column(out / '3' / 'received.csv'), _column(out / '4' / 'received.csv'))


def test_sweep_first_delay(capsys):
    path = out / 'tau1.csv'
    assert main(['sweep', 'tau1', '--out', str(path)]) == EXIT_OK

    metadata, header, rows = read_csv(path)
    values, surface = _column(path, 0), _column(path, 1)
    assert header == ['parameter_value', 'E_c']
    assert len(rows) == 1000
    assert values[int(np.argmin(surface))] == 200.0
    assert metadata['parameter'] == 'tau1'
    assert 'argmin tau1 = 200' in capsys.readouterr().out


@pytest.mark.parametrize('parameter,expected', [('tau2', 204.0), ('tau3', 220.0)])
def test_sweep_other_delays(parameter, expected):
    path = out / f'{parameter}.csv'
    assert main(['sweep', parameter, '--out', str(path)]) == EXIT_OK

    assert _column(path, 0)[int(np.argmin(_column(path, 1)))] == expected


def test_sweep_second_amplitude(capsys):
    path = out / 'a2.csv'
    assert main(['sweep', 'a2', '--start', '-2', '--stop', '2', '--steps', '401', '--out', str(path)]) == EXIT_OK

    assert error_fn.parabola_vertex(_column(path, 0), _column(path, 1)) == pytest.approx(-0.8, abs=1e-3)
    assert 'vertex a2' in capsys.readouterr().out


def test_sweep_is_periodic_in_delay():
    path = out / 'period.csv'
    assert main(['sweep', 'tau2', '--start', '0', '--stop', '2000', '--steps', '2001', '--out', str(path)]) == EXIT_OK

    surface = _column(path, 1)
    first, second = surface[:1000], surface[1000:2000]
    assert np.allclose(first, second, rtol=1e-9, atol=1e-9 * surface.max())


def test_sweep_raef_and_lambda_axis():
    path = out / 'raef.csv'
    assert main(['sweep', 'tau1', '--error-fn', 'raef', '--start', '190', '--stop', '210', '--steps', '21',
                 '--out', str(path)]) == EXIT_OK
    assert _column(path, 0)[int(np.argmin(_column(path, 1)))] == 200.0

    path = out / 'lambda.csv'
    assert main(['sweep', 'tau1', '--axis', 'lambda', '--steps', '1000', '--out', str(path)]) == EXIT_OK
    lam = _column(path, 0)
    assert lam[int(np.argmin(_column(path, 1)))] == pytest.approx(-0.4 * np.pi)


def test_sweep_unknown_parameter():
    assert main(['sweep', 'tau4', '--out', str(out / 'bad.csv')]) == EXIT_CONFIG
    assert not (out / 'bad.csv').exists()


def test_estimate_writes_report_and_history(capsys, three_path):
    target = out / 'estimate'
    assert main(['estimate', '--mode', 'hybrid', '--seed', '1', '--out', str(target)] + SMALL_GA) == EXIT_OK

    metadata, header, rows = read_csv(target / 'report.csv')
    report = dict(rows)
    assert header == ['field', 'value']
    assert metadata['mode'] == 'hybrid'
    assert {'a1', 'a2', 'a3', 'tau1', 'tau2', 'tau3', 'objective', 'generations', 'wall_time'} <= set(report)
    assert report['generations'] == '5'
    assert report['quality_warning'] in ('true', 'false')
    assert float(report['objective']) <= 1e-6 * three_path.support.received_energy

    _, header, rows = read_csv(target / 'history.csv')
    assert header == ['generation', 'best_E_c', 'mean_E_c']
    assert len(rows) == 5
    assert 'E_c =' in capsys.readouterr().out


def test_estimate_report_is_reproducible():
    reports = []
    for name in ('first', 'second'):
        assert main(['estimate', '--seed', '11', '--out', str(out / name)] + SMALL_GA) == EXIT_OK
        _, _, rows = read_csv(out / name / 'report.csv')
        reports.append([row for row in rows if row[0] != 'wall_time'])

    assert reports[0] == reports[1]
    assert (out / 'first' / 'history.csv').read_bytes() == (out / 'second' / 'history.csv').read_bytes()


def test_estimate_with_extra_paths():
    target = out / 'four'
    assert main(['estimate', '--mode', 'hybrid', '--set', 'estimate.num_paths=4', '--out', str(target)]
                + SMALL_GA) == EXIT_OK

    _, _, rows = read_csv(target / 'report.csv')
    assert 'tau4' in dict(rows)


def test_estimate_exit_codes(tmp_path):
    bad = tmp_path / 'bad.ini'
    bad.write_text('[ga]\npopulation = 3\n')
    assert main(['estimate', '--config', str(bad), '--out', str(out / 'e')]) == EXIT_CONFIG

    assert main(['estimate', '--config', str(tmp_path / 'missing.ini')]) == EXIT_IO

    assert main(['estimate', '--set', 'estimate.num_paths=600', '--out', str(out / 'e')] + SMALL_GA) == EXIT_ESTIMATION

    blocker = tmp_path / 'blocker'
    blocker.write_text('')
    assert main(['estimate', '--out', str(blocker / 'e')] + SMALL_GA) == EXIT_IO


def test_config_errors_are_logged_with_location(tmp_path, caplog):
    bad = tmp_path / 'bad.ini'
    bad.write_text('[run]\nseed = 1\nflavour = 2\n')

    assert main(['synth', '--config', str(bad), '--out', str(out / 's')]) == EXIT_CONFIG
    assert f'{bad}:3:' in caplog.text


def test_bench_rows():
    path = out / 'bench.csv'
    assert main(['bench', '--trials', '2', '--mode', 'hybrid', '--set', 'bench.snr_list=20, noiseless',
                 '--out', str(path)] + SMALL_GA) == EXIT_OK

    metadata, header, rows = read_csv(path)
    assert header == ['snr_db', 'parameter_name', 'mse', 'trials', 'median_se']
    assert len(rows) == 12
    assert [row[1] for row in rows[:6]] == ['a1', 'a2', 'a3', 'tau1', 'tau2', 'tau3']
    assert {row[0] for row in rows} == {'20', 'inf'}
    assert all(row[3] == '2' for row in rows)
    assert all(float(row[2]) >= 0 for row in rows)
    assert metadata['master_seed'] == '1'


def test_bench_is_independent_of_workers():
    args = ['bench', '--trials', '2', '--seed', '5', '--set', 'bench.snr_list=10, 0'] + SMALL_GA
    assert main(args + ['--workers', '1', '--out', str(out / 'serial.csv')]) == EXIT_OK
    assert main(args + ['--workers', '2', '--out', str(out / 'parallel.csv')]) == EXIT_OK

    assert (out / 'serial.csv').read_bytes() == (out / 'parallel.csv').read_bytes()


def test_run_bench_uses_distinct_trials():
    config = load_config(None, ['bench.trials=3', 'bench.snr_list=0', 'ga.population_size=6',
                                'ga.max_generations=2', 'estimate.mode=hybrid'])
    ((snr_db, mse, median),) = harness_cli.run_bench(config)

    assert snr_db == 0.0
    assert set(mse) == {'a1', 'a2', 'a3', 'tau1', 'tau2', 'tau3'}
    assert all(value >= 0 for value in median.values())


@pytest.mark.slow
def test_bench_trend(tmp_path):
    path = tmp_path / 'trend.csv'
    assert main(['bench', '--mode', 'hybrid', '--workers', '4', '--out', str(path)]) == EXIT_OK

    _, _, rows = read_csv(path)
    median = {(row[0], row[1]): float(row[4]) for row in rows}
    for name in ('tau1', 'tau2', 'tau3'):
        assert median[('20', name)] < median[('-10', name)]
