"""End-to-end tests for the command line entry point"""

import json

import pytest
import yaml

from src.actions import format_action
from src.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_UNREACHABLE, main
from src.data import DataLoader, iter_jsonl, write_jsonl
from src.metrics import read_json_lines_report


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for role in ('G', 'Q'):
        monkeypatch.delenv(f"ANNOTATOR_{role}_URL", raising=False)
        monkeypatch.delenv(f"ANNOTATOR_{role}_MODEL", raising=False)
    return tmp_path


@pytest.fixture
def built(workdir, quadruplets):
    path = workdir / 'quadruplets.jsonl'
    DataLoader(show_progress=False).save(path, quadruplets)
    out = workdir / 'bench'
    assert main(['--output-dir', str(out), '--seed', '3', 'build', '--quadruplets', str(path), '--ratio', '0.5']) == EXIT_OK
    return out


def test_build_writes_dataset(built):
    samples = list(iter_jsonl(built / 'samples.jsonl'))
    train = list(iter_jsonl(built / 'train.jsonl'))
    test = list(iter_jsonl(built / 'test.jsonl'))
    assert len(samples) == 6
    assert len(train) + len(test) == 6
    manifest = json.loads((built / 'split_manifest.json').read_text(encoding='utf-8'))
    assert manifest['seed'] == 3 and manifest['ratio'] == 0.5


def _predict(samples_path, out_path, skip=0):
    samples = DataLoader(show_progress=False).load_samples(samples_path)
    rows = [{'sample_id': s.sample_id, 'prediction': format_action(s.label_action)} for s in samples[skip:]]
    write_jsonl(out_path, rows)
    return samples


def test_eval_state_perfect_predictions(built, workdir):
    _predict(built / 'samples.jsonl', workdir / 'pred.jsonl')
    out = workdir / 'eval'
    code = main(['--output-dir', str(out), 'eval-state', '--samples', str(built / 'samples.jsonl'),
                 '--predictions', str(workdir / 'pred.jsonl'), '--click-threshold', 'state-control'])
    assert code == EXIT_OK
    report = read_json_lines_report(out / 'state_control_report.jsonl')
    assert report['o_amr'] == 1.0
    assert (out / 'state_control_report.txt').exists()


def test_eval_state_missing_predictions(built, workdir):
    _predict(built / 'samples.jsonl', workdir / 'pred.jsonl', skip=1)
    args = ['--output-dir', str(workdir / 'eval'), 'eval-state', '--samples', str(built / 'samples.jsonl'),
            '--predictions', str(workdir / 'pred.jsonl')]
    assert main(args) == EXIT_RUNTIME
    assert main(args + ['--strict']) == EXIT_OK
    missing = (workdir / 'eval' / 'state_control_report_missing.txt').read_text(encoding='utf-8').split()
    assert len(missing) == 1


def test_eval_state_bad_threshold(built, workdir):
    _predict(built / 'samples.jsonl', workdir / 'pred.jsonl')
    code = main(['--output-dir', str(workdir / 'eval'), 'eval-state', '--samples', str(built / 'samples.jsonl'),
                 '--predictions', str(workdir / 'pred.jsonl'), '--click-threshold', 'loose'])
    assert code == EXIT_CONFIG


def test_eval_agentic(workdir):
    episode = {'episode_id': 'e1', 'instruction': 'Turn off Wi-Fi', 'steps': [
        {'step': 0, 'action': {'type': 'OPENAPP', 'app_name': 'Settings'}},
        {'step': 1, 'action': {'type': 'CLICK', 'point': [880, 190]}, 'layout': [[800, 150, 960, 230]]},
        {'step': 2, 'action': {'type': 'COMPLETED'}},
    ]}
    write_jsonl(workdir / 'episodes.jsonl', [episode])
    write_jsonl(workdir / 'steps.jsonl', [
        {'episode_id': 'e1', 'step': 0, 'prediction': 'OPENAPP <app>settings</app>'},
        {'episode_id': 'e1', 'step': 1, 'prediction': 'CLICK <point>[[820,200]]</point>'},
        {'episode_id': 'e1', 'step': 2, 'prediction': 'COMPLETED'},
    ])
    out = workdir / 'agentic'
    code = main(['--output-dir', str(out), 'eval-agentic', '--episodes', str(workdir / 'episodes.jsonl'),
                 '--predictions', str(workdir / 'steps.jsonl')])
    assert code == EXIT_OK
    report = read_json_lines_report(out / 'agentic_report.jsonl')
    assert report['tsr'] == 1.0 and report['gmr'] == 1.0


def test_star_synth_text_chain(built, workdir):
    out = workdir / 'star'
    code = main(['--output-dir', str(out), 'star-synth', '--samples', str(built / 'samples.jsonl'),
                 '--history-mode', 'text-chain'])
    assert code == EXIT_OK
    rows = list(iter_jsonl(out / 'star_text_chain.jsonl'))
    assert len(rows) == 6
    assert all(r['meta']['history_mode'] == 'text-chain' for r in rows)


def test_star_synth_needs_input(workdir):
    assert main(['--output-dir', str(workdir / 'star'), 'star-synth']) == EXIT_CONFIG


def test_eval_dynamic_optimal(workdir, capsys):
    out = workdir / 'dyn'
    code = main(['--output-dir', str(out), 'eval-dynamic', '--agent', 'optimal', '--tasks', 'SystemWifiTurnOn'])
    assert code == EXIT_OK
    assert 'Success rate: 100_{1/1}' in capsys.readouterr().out
    assert (out / 'transcripts' / 'SystemWifiTurnOn.json').exists()


def test_eval_dynamic_unknown_task(workdir):
    code = main(['--output-dir', str(workdir / 'dyn'), 'eval-dynamic', '--agent', 'optimal', '--tasks', 'NoSuchTask'])
    assert code == EXIT_CONFIG


def test_eval_dynamic_unstartable_agent(workdir):
    code = main(['--output-dir', str(workdir / 'dyn'), 'eval-dynamic',
                 '--agent', 'definitely-not-an-agent-binary', '--tasks', 'SystemWifiTurnOn'])
    assert code == EXIT_UNREACHABLE


def _annotation_inputs(workdir):
    record = {'screen_id': 's1', 'image_ref': 'images/s1.png', 'screen_dims': [1080, 2400],
              'original_boxes': [[800, 150, 960, 230]], 'parsed_boxes': [], 'source_instruction': 'Open settings'}
    write_jsonl(workdir / 'records.jsonl', [record])
    entry = {'screen_id': 's1', 'box': [800, 150, 960, 230], 'identify': 'Answer: yes',
             'state_feature': 'State: on\nFeature: Wi-Fi'}
    (workdir / 'mock.yaml').write_text(yaml.safe_dump({'annotators': {'G': [entry], 'Q': [entry]}}),
                                       encoding='utf-8')


def test_annotate_with_mock_annotators(workdir):
    _annotation_inputs(workdir)
    out = workdir / 'ann'
    code = main(['--output-dir', str(out), 'annotate', '--records', str(workdir / 'records.jsonl'),
                 '--mock-annotators', str(workdir / 'mock.yaml')])
    assert code == EXIT_OK
    rows = list(iter_jsonl(out / 'quadruplets.jsonl'))
    assert len(rows) == 1 and rows[0]['state'] == 'on'
    assert (out / 'audit_summary.json').exists()


def test_annotate_without_annotators_configured(workdir):
    _annotation_inputs(workdir)
    code = main(['--output-dir', str(workdir / 'ann'), 'annotate', '--records', str(workdir / 'records.jsonl')])
    assert code == EXIT_CONFIG


def test_report_comparison(built, workdir):
    _predict(built / 'samples.jsonl', workdir / 'pred.jsonl')
    main(['--output-dir', str(workdir / 'a'), 'eval-state', '--samples', str(built / 'samples.jsonl'),
          '--predictions', str(workdir / 'pred.jsonl')])
    out = workdir / 'cmp'
    code = main(['--output-dir', str(out), 'report', f"run-a={workdir / 'a' / 'state_control_report.jsonl'}"])
    assert code == EXIT_OK
    assert 'run-a' in (out / 'comparison.txt').read_text(encoding='utf-8')


def test_config_file_is_validated(workdir):
    (workdir / 'bad.yaml').write_text('matching:\n  not_a_key: 1\n', encoding='utf-8')
    code = main(['--config', str(workdir / 'bad.yaml'), '--output-dir', str(workdir / 'x'),
                 'eval-dynamic', '--agent', 'optimal'])
    assert code == EXIT_CONFIG


def test_threshold_presets_change_only_distance_gated_metrics(built, workdir):
    samples = DataLoader(show_progress=False).load_samples(built / 'samples.jsonl')
    rows = []
    for s in samples:
        c = s.toggle_box.center
        rows.append({'sample_id': s.sample_id, 'prediction': f"CLICK <point>[[{c.x},{c.y + 100}]]</point>"})
    write_jsonl(workdir / 'offset.jsonl', rows)

    reports = {}
    for preset in ('state-control', 'agentic'):
        out = workdir / preset
        assert main(['--output-dir', str(out), 'eval-state', '--samples', str(built / 'samples.jsonl'),
                     '--predictions', str(workdir / 'offset.jsonl'), '--click-threshold', preset]) == EXIT_OK
        reports[preset] = read_json_lines_report(out / 'state_control_report.jsonl')

    strict, loose = reports['state-control'], reports['agentic']
    for name in ('o_tmr', 'p_tmr', 'p_fnr', 'n_amr', 'n_fptr'):
        assert strict[name] == loose[name]
    assert strict['p_amr'] == 0.0 and loose['p_amr'] == 1.0
    assert strict['n_fpr'] == 0.0 and loose['n_fpr'] == 1.0


def test_annotate_unreachable_endpoint(workdir, monkeypatch):
    _annotation_inputs(workdir)
    for role in ('G', 'Q'):
        monkeypatch.setenv(f"ANNOTATOR_{role}_URL", 'http://127.0.0.1:9/v1/chat/completions')
        monkeypatch.setenv(f"ANNOTATOR_{role}_MODEL", 'annotator')
    for var in ('HTTP_PROXY', 'http_proxy', 'ALL_PROXY', 'all_proxy'):
        monkeypatch.delenv(var, raising=False)
    out = workdir / 'ann'
    code = main(['--output-dir', str(out), 'annotate', '--records', str(workdir / 'records.jsonl')])
    assert code == EXIT_UNREACHABLE
    assert not (out / 'quadruplets.jsonl').exists()


def test_star_synth_parallel_workers_match_serial(built, workdir):
    (workdir / 'parallel.yaml').write_text('star:\n  n_jobs: 2\n', encoding='utf-8')
    outputs = {}
    for name, extra in (('serial', []), ('parallel', ['--config', str(workdir / 'parallel.yaml')])):
        out = workdir / name
        assert main(extra + ['--output-dir', str(out), 'star-synth',
                             '--samples', str(built / 'samples.jsonl')]) == EXIT_OK
        outputs[name] = (out / 'star_none.jsonl').read_text(encoding='utf-8')
    assert outputs['serial'] == outputs['parallel']
    assert len(outputs['serial'].splitlines()) == 6


def test_eval_state_json_lines_still_prints_table(built, workdir, capsys):
    _predict(built / 'samples.jsonl', workdir / 'pred.jsonl')
    out = workdir / 'eval'
    code = main(['--output-dir', str(out), 'eval-state', '--samples', str(built / 'samples.jsonl'),
                 '--predictions', str(workdir / 'pred.jsonl'), '--report-format', 'json-lines'])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert 'O-AMR' in printed and '"key": "o_amr"' in printed
    assert (out / 'state_control_report.jsonl').exists()
    assert (out / 'state_control_report.txt').exists()


def test_eval_dynamic_requires_agent(workdir):
    assert main(['--output-dir', str(workdir / 'dyn'), 'eval-dynamic', '--tasks', 'SystemWifiTurnOn']) == EXIT_CONFIG


def test_annotate_prints_drop_reasons(workdir, capsys):
    _annotation_inputs(workdir)
    entry = {'screen_id': 's1', 'box': [100, 100, 200, 180], 'identify': 'Answer: no'}
    script = yaml.safe_load((workdir / 'mock.yaml').read_text(encoding='utf-8'))
    for role in ('G', 'Q'):
        script['annotators'][role].append(entry)
    (workdir / 'mock.yaml').write_text(yaml.safe_dump(script), encoding='utf-8')
    records = list(iter_jsonl(workdir / 'records.jsonl'))
    records[0]['original_boxes'].append([100, 100, 200, 180])
    write_jsonl(workdir / 'records.jsonl', records)

    code = main(['--output-dir', str(workdir / 'ann'), 'annotate', '--records', str(workdir / 'records.jsonl'),
                 '--mock-annotators', str(workdir / 'mock.yaml')])
    assert code == EXIT_OK
    assert 'dropped (not-toggle): 1' in capsys.readouterr().out
