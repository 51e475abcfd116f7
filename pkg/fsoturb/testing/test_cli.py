"""
The command line: outputs, exit codes and reproducibility.
"""
import csv
import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from fsoturb.cli import main, cmd_pdf
from fsoturb.config import Config
from fsoturb.analytic import cdf_fundamental, pdf_fundamental, sample_fundamental


def read_csv(path):
    with open(path, newline='') as csv_file:
        rows = list(csv.reader(csv_file))
    return rows[0], rows[1:]


def read_json(path):
    with open(path) as json_file:
        return json.load(json_file)


def test_variances(tmp_path):
    out = tmp_path / 'variances.json'
    assert main(['variances', '--r0', '0.01', '--out', str(out), '-v', 'WARNING']) == 0
    document = read_json(out)
    assert set(document) == {'c_a', 'c_g', 'c_s', 'vartheta', 'K'}
    assert document['c_g'] / document['c_s'] == pytest.approx(3, rel=1e-12)
    assert document['c_a'] == pytest.approx(document['K'] * 0.01 ** (-5 / 3), rel=1e-12)


def test_variances_r0_doubled(tmp_path):
    main(['variances', '--r0', '0.01', '--out', str(tmp_path / 'a.json')])
    main(['variances', '--r0', '0.02', '--out', str(tmp_path / 'b.json')])
    ratio = read_json(tmp_path / 'b.json')['c_a'] / read_json(tmp_path / 'a.json')['c_a']
    assert ratio == pytest.approx(2 ** (-5 / 3), rel=1e-10)


def test_outer_scale_below_inner_scale(tmp_path):
    assert main(['variances', '--L0', '0.001', '--out', str(tmp_path / 'v.json')]) == 2
    assert not (tmp_path / 'v.json').exists()


def test_invalid_config_document(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'r0': 0.01, 'inner_scale': 0.002}))
    assert main(['variances', '--config', str(path)]) == 2


def test_config_document_with_overrides(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'r0': 0.01, 'w': 0.002}))
    main(['variances', '--config', str(path), '--out', str(tmp_path / 'file.json')])
    main(['variances', '--config', str(path), '--r0', '0.02', '--out', str(tmp_path / 'flag.json')])
    ratio = read_json(tmp_path / 'flag.json')['c_a'] / read_json(tmp_path / 'file.json')['c_a']
    assert ratio == pytest.approx(2 ** (-5 / 3), rel=1e-10)


def test_pdf_uniform(tmp_path):
    out = tmp_path / 'pdf.csv'
    assert main(['pdf', '--gamma', '1', '--points', '50', '--out', str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ['T', 'density']
    assert len(rows) == 50
    assert all(density == '1.0' for _, density in rows)


@pytest.mark.parametrize('flags', [[], ['--gamma', '2']])
def test_pdf_normalised(tmp_path, flags):
    out = tmp_path / 'pdf.csv'
    assert main(['pdf', '--out', str(out)] + flags) == 0
    _, rows = read_csv(out)
    T, density = np.array(rows, dtype=float).T
    assert integrate.trapezoid(density, T) == pytest.approx(1.0, abs=1e-3)


def test_pdf_matches_library(tmp_path):
    out = tmp_path / 'pdf.csv'
    main(['pdf', '--gamma', '2.5', '--points', '100', '--out', str(out)])
    _, rows = read_csv(out)
    T, density = np.array(rows, dtype=float).T
    np.testing.assert_allclose(density, pdf_fundamental(2.5, T), rtol=1e-15)


def test_pdf_crosstalk_level(tmp_path):
    out = tmp_path / 'level1.csv'
    assert main(['pdf', '--level', '1', '--out', str(out)]) == 0
    _, rows = read_csv(out)
    T, density = np.array(rows, dtype=float).T
    assert T[-1] < math.exp(-1)
    assert np.all(np.diff(T) > 0)
    assert np.all(density > 0)
    assert integrate.trapezoid(density, T) == pytest.approx(1.0, abs=1e-2)


def test_pdf_json():
    document = json.loads(cmd_pdf(Config(gamma=3.0, points=10, format='json')))
    assert document['level'] == 0
    assert len(document['T']) == len(document['density']) == 10


def test_simulate_is_reproducible(tmp_path):
    outputs = []
    for name, workers in (('a', '1'), ('b', '1'), ('c', '3')):
        out = tmp_path / f'{name}.csv'
        raw = tmp_path / f'{name}.txt'
        assert main(['simulate', '--samples', '10000', '--seed', '123', '--order', 'second', '--workers', workers,
                     '--out', str(out), '--raw-out', str(raw)]) == 0
        outputs.append((out.read_bytes(), raw.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_simulate_histogram(tmp_path):
    out = tmp_path / 'histogram.csv'
    main(['simulate', '--samples', '5000', '--bins', '20', '--out', str(out)])
    header, rows = read_csv(out)
    assert header == ['bin_lo', 'bin_hi', 'density']
    assert len(rows) == 20
    lo, hi, density = np.array(rows, dtype=float).T
    assert np.sum(density * (hi - lo)) == pytest.approx(1.0, rel=1e-12)
    assert out.read_text().endswith('\n')


def test_simulate_tracking(tmp_path):
    means = {}
    for tracking in ('false', 'true'):
        out = tmp_path / f'{tracking}.json'
        main(['simulate', '--samples', '5000', '--seed', '9', '--order', 'second', '--tracking', tracking,
              '--format', 'json', '--out', str(out)])
        document = read_json(out)
        assert set(document) == {'bins', 'density', 'mean', 'std_error', 'count'}
        means[tracking] = document['mean']
    assert means['true'] > means['false']


def test_simulate_agrees_with_pdf(tmp_path):
    raw = tmp_path / 'raw.txt'
    assert main(['simulate', '--gamma', '2', '--samples', '100000', '--seed', '4', '--raw-out', str(raw),
                 '--out', str(tmp_path / 'histogram.csv')]) == 0
    samples = np.loadtxt(raw)
    assert len(samples) == 100_000
    assert stats.kstest(samples, lambda T: cdf_fundamental(2.0, T)).statistic < 0.01


def test_simulate_grid_too_coarse(tmp_path):
    code = main(['simulate', '--engine', 'grid', '--r0', '1e-6', '--samples', '5',
                 '--out', str(tmp_path / 'histogram.csv')])
    assert code == 3


def test_crosstalk(tmp_path):
    out = tmp_path / 'crosstalk.csv'
    assert main(['crosstalk', '--samples', '2000', '--n-max', '3', '--bins', '10', '--out', str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ['level', 'bin_lo', 'bin_hi', 'density']
    assert [row[0] for row in rows] == [str(level) for level in range(4) for _ in range(10)]


def test_estimate_r0(tmp_path, transmittance_file):
    # synthetic data for the default chamber settings
    variances = Config().variances()
    gamma = 2 / (Config().w ** 2 * variances.c_a)
    samples = sample_fundamental(gamma, 100_000, np.random.default_rng(3))
    path = transmittance_file(np.append(samples, [0.0, 0.0]), header='transmittance')

    out = tmp_path / 'estimate.json'
    assert main(['estimate-r0', '--input', str(path), '--out', str(out)]) == 0
    document = read_json(out)
    assert set(document) == {'gamma', 'c_a', 'r0', 'ci_lo', 'ci_hi', 'rejected_count'}
    assert document['r0'] == pytest.approx(Config().r0, rel=0.05)
    assert document['ci_lo'] < document['r0'] < document['ci_hi']
    assert document['rejected_count'] == 2


def test_estimate_r0_negative_value(transmittance_file):
    path = transmittance_file([0.5] * 200 + [-0.1])
    assert main(['estimate-r0', '--input', str(path)]) == 2


def test_estimate_r0_malformed_row(tmp_path):
    path = tmp_path / 'broken.csv'
    path.write_text('0.5\n' * 150 + '0.5,0.4,0.3\n')
    assert main(['estimate-r0', '--input', str(path)]) == 2


def test_estimate_r0_no_turbulence(transmittance_file):
    path = transmittance_file([1.0] * 500)
    assert main(['estimate-r0', '--input', str(path)]) == 4


def test_missing_input_file(tmp_path):
    with pytest.raises(SystemExit) as exit_info:
        main(['estimate-r0', '--input', str(tmp_path / 'missing.csv')])
    assert exit_info.value.code == 2


def test_raw_samples_in_new_directory(tmp_path):
    raw = tmp_path / 'runs' / 'seed4' / 'raw.txt'
    assert main(['simulate', '--samples', '500', '--seed', '4', '--raw-out', str(raw),
                 '--out', str(tmp_path / 'histogram.csv')]) == 0
    assert len(np.loadtxt(raw)) == 500


def test_output_is_a_directory(tmp_path):
    assert main(['variances', '--out', str(tmp_path)]) == 2


def test_estimate_r0_binary_input(tmp_path):
    path = tmp_path / 'binary.csv'
    path.write_bytes(b'0.5\n' * 150 + b'0.4\xff\n')
    assert main(['estimate-r0', '--input', str(path)]) == 2
