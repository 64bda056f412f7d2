"""
Command Line Interface
Build, annotate, synthesize reasoning, evaluate and report from one entry point
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from src.actions import list_dialects
from src.config import RunConfig, load_config, setup_logging
from src.errors import (
    AgentSpawnError,
    AnnotatorError,
    ConfigError,
    MissingPredictionError,
    ToggleBenchError,
    UnknownTaskError,
)
from src.matching import DISTANCE_METRICS, PRESETS, MatchConfig

logger = logging.getLogger('togglebench')

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_UNREACHABLE = 3

HISTORY_MODES = ('none', 'text-chain', 'screenshot-chain')
REPORT_FORMATS = ('json-lines', 'table')


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _match_config(cfg: RunConfig) -> MatchConfig:
    m = cfg['matching']
    try:
        return MatchConfig.from_threshold(m['click_threshold'], distance_metric=m['distance_metric'],
                                          stemmer=m['stemmer'])
    except ValueError as e:
        raise ConfigError(str(e))


def _require(path: Optional[str], flag: str) -> Path:
    if not path:
        raise ConfigError(f"{flag} is required")
    return Path(path)


# ------------------------------------------------------------------ build

def cmd_build(args, cfg: RunConfig) -> int:
    from src.data import DataLoader, InstructionTemplates, apply_split, build_benchmark, dataset_stats

    b = cfg['builder']
    banner("BENCHMARK BUILD")
    loader = DataLoader(show_progress=False)

    print("\n[1/3] Loading quadruplets...")
    quadruplets = loader.load_quadruplets(_require(args.quadruplets, '--quadruplets'))
    print(f"Loaded {len(quadruplets):,} quadruplets")

    print("\n[2/3] Expanding and splitting...")
    templates = InstructionTemplates(b['templates'])
    try:
        samples, manifest = build_benchmark(quadruplets, cfg.seed, b['ratio'], templates, b['paraphrase'])
    except ValueError as e:
        raise ConfigError(str(e))
    train, test = apply_split(samples, manifest)

    print("\n[3/3] Writing outputs...")
    loader.save(cfg.output_dir / 'samples.jsonl', samples)
    loader.save(cfg.output_dir / 'train.jsonl', train)
    loader.save(cfg.output_dir / 'test.jsonl', test)
    loader.save_manifest(cfg.output_dir / 'split_manifest.json', manifest)

    stats = dataset_stats(samples)
    print(f"\nSamples: {stats['samples']:,} (positive {stats['positive']:,} / negative {stats['negative']:,})")
    print(f"Split:   train {len(train):,} / test {len(test):,}")
    print(f"States:  on {stats['state_on']:,} / off {stats['state_off']:,}")
    if stats['top_features']:
        print("Top features:")
        for feature, n in stats['top_features'].items():
            print(f"  {feature:<40} {n:>6}")
    return EXIT_OK


# --------------------------------------------------------------- annotate

def cmd_annotate(args, cfg: RunConfig) -> int:
    from src.annotation import AnnotationPipeline, Checkpoint, create_annotators
    from src.data import DataLoader

    a = cfg['annotation']
    banner("TOGGLE ANNOTATION")
    records = DataLoader(show_progress=False).load_records(_require(args.records, '--records'))
    print(f"Loaded {len(records):,} screen records")

    annotators = create_annotators(a, mock_script=args.mock_annotators)
    for client in annotators:
        try:
            client.check_reachable()
        except AnnotatorError as e:
            logger.error("%s", e)
            print(f"\nAnnotator unreachable, nothing written: {e}")
            return EXIT_UNREACHABLE

    pipeline = AnnotationPipeline.from_config(annotators, a)
    checkpoint = Checkpoint(cfg.output_dir / 'checkpoint.jsonl', restart=args.restart)
    result = pipeline.run(records, checkpoint, show_progress=True)
    paths = result.write(cfg.output_dir)

    funnel = result.audit.funnel()
    print("\nRetention funnel:")
    print(f"  boxes:       {funnel['boxes']:>8,}")
    print(f"  toggles:     {funnel['toggles']:>8,}")
    print(f"  retained:    {funnel['retained']:>8,}")
    for reason, n in sorted(result.audit.dropped.items()):
        print(f"  dropped ({reason}): {n:,}")
    print(f"\nQuadruplets saved to: {paths['quadruplets']}")
    print(f"Audit saved to: {paths['audit']}")
    if result.audit.errored:
        print(f"{result.audit.errored} boxes failed; rerun to retry them")
    return EXIT_OK


# ------------------------------------------------------------- star-synth

def cmd_star_synth(args, cfg: RunConfig) -> int:
    from src.data import DataLoader, iter_jsonl
    from src.star import (
        ChainTemplates,
        ToggleAnnotation,
        examples_from_episode,
        examples_from_samples,
        export_training,
        group_annotations,
        refine_episode,
    )

    s = cfg['star']
    if not args.samples and not args.episodes:
        raise ConfigError("star-synth needs --samples and/or --episodes")
    banner("STATE-AWARE REASONING SYNTHESIS")
    loader = DataLoader(show_progress=False)
    templates = ChainTemplates(s['templates'])
    examples = []

    if args.samples:
        samples = loader.load_samples(args.samples)
        examples += examples_from_samples(samples, templates, s['n_jobs'])
        print(f"State-control samples: {len(samples):,}")

    if args.episodes:
        episodes = loader.load_episodes(args.episodes)
        notes: Dict[str, Dict] = {}
        if args.toggle_annotations:
            notes = group_annotations(ToggleAnnotation.from_dict(r) for r in iter_jsonl(args.toggle_annotations))
        refined = [refine_episode(ep, notes.get(ep.episode_id, {}), templates) for ep in episodes]
        loader.save(cfg.output_dir / 'refined_episodes.jsonl', refined)
        for ep in refined:
            examples += examples_from_episode(ep)
        print(f"Agentic episodes: {len(episodes):,} ({sum(len(ep.steps) for ep in episodes):,} steps)")

    output = cfg.output_dir / f"star_{s['history_mode'].replace('-', '_')}.jsonl"
    export_training(examples, cfg['actions']['dialect'], s['history_mode'], output, templates)
    print(f"\nExported {len(examples):,} training examples to {output}")
    return EXIT_OK


# ------------------------------------------------------------- evaluation

def _emit(report, cfg: RunConfig, stem: str, missing: List[str]) -> None:
    from src.metrics import render_report, write_report

    fmt = cfg['report']['format']
    print()
    print(render_report(report, 'table'))
    if fmt == 'json-lines':
        print(render_report(report, fmt))
    if missing:
        preview = ', '.join(missing[:10]) + (' ...' if len(missing) > 10 else '')
        print(f"\n{len(missing)} missing predictions scored as non-matches: {preview}")
        (cfg.output_dir / f"{stem}_missing.txt").write_text('\n'.join(missing) + '\n', encoding='utf-8')
    for path in write_report(report, cfg.output_dir, stem):
        print(f"Saved {path}")


def cmd_eval_state(args, cfg: RunConfig) -> int:
    from src.data import DataLoader
    from src.metrics import eval_state_control, score_samples

    banner("STATE CONTROL EVALUATION")
    loader = DataLoader(show_progress=False)
    samples = loader.load_samples(_require(args.samples, '--samples'))
    predictions = loader.load_predictions(_require(args.predictions, '--predictions'))
    match_cfg = _match_config(cfg)
    print(f"Samples: {len(samples):,}  predictions: {len(predictions):,}  "
          f"click threshold: {match_cfg.click_threshold:g}")

    scored, missing = score_samples(samples, predictions, match_cfg, cfg['actions']['dialect'],
                                    strict=args.strict, n_jobs=cfg['matching']['n_jobs'])
    _emit(eval_state_control(scored, match_cfg), cfg, 'state_control_report', missing)
    return EXIT_OK


def cmd_eval_agentic(args, cfg: RunConfig) -> int:
    from src.data import DataLoader
    from src.metrics import eval_agentic, score_episodes

    banner("AGENTIC EVALUATION")
    loader = DataLoader(show_progress=False)
    episodes = loader.load_episodes(_require(args.episodes, '--episodes'))
    predictions = loader.load_step_predictions(_require(args.predictions, '--predictions'))
    match_cfg = _match_config(cfg)
    print(f"Episodes: {len(episodes):,}  predictions: {len(predictions):,}  "
          f"click threshold: {match_cfg.click_threshold:g}")

    trajectories, missing = score_episodes(episodes, predictions, match_cfg, cfg['actions']['dialect'],
                                           strict=args.strict)
    _emit(eval_agentic(trajectories), cfg, 'agentic_report', missing)
    return EXIT_OK


def cmd_eval_dynamic(args, cfg: RunConfig) -> int:
    from src.inference import create_agent
    from src.simulation import TaskRegistry, ToggleWorld, run_suite

    sim = cfg['simulation']
    dialect = cfg['actions']['dialect']
    banner("DYNAMIC EVALUATION")
    registry = TaskRegistry(sim['tasks_path'])
    task_ids = [t for t in (args.tasks or '').split(',') if t.strip()]
    tasks = registry.select([t.strip() for t in task_ids])
    world = ToggleWorld(registry.graph, sim['budget'])

    if not args.agent:
        raise ConfigError("--agent is required")
    agent = create_agent(args.agent, registry.graph, dialect, sim['agent_timeout'])
    agent.start()
    try:
        print(f"Agent: {agent.name}  tasks: {len(tasks)}  budget: {sim['budget']}")
        report = run_suite(agent, tasks, sim['budget'], cfg.seed, dialect, sim['n_jobs'], world)
    finally:
        agent.close()

    summary_path = report.write(cfg.output_dir)
    print()
    for r in report.results:
        print(f"  {r.task_id:<40} {r.success_ratio:>5.2f}  ({r.steps_taken} steps, {r.termination.value})")
    print(f"\nSuccess rate: {report.summary}")
    print(f"Summary saved to: {summary_path}")
    return EXIT_OK


# ----------------------------------------------------------------- report

def cmd_report(args, cfg: RunConfig) -> int:
    from src.metrics import compare_reports, read_json_lines_report

    if not args.inputs:
        raise ConfigError("report needs at least one NAME=PATH input")
    reports = {}
    for item in args.inputs:
        name, sep, path = item.partition('=')
        if not sep:
            name, path = Path(item).stem, item
        reports[name] = read_json_lines_report(path)

    banner("REPORT")
    table = compare_reports(reports)
    print(table)
    if cfg['report']['format'] == 'table':
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        out = cfg.output_dir / 'comparison.txt'
        out.write_text(table + '\n', encoding='utf-8')
        print(f"\nSaved {out}")
    else:
        for name, data in reports.items():
            print(json.dumps({'name': name, **data}, sort_keys=True))
    return EXIT_OK


COMMANDS: Dict[str, Callable] = {
    'build': cmd_build,
    'annotate': cmd_annotate,
    'star-synth': cmd_star_synth,
    'eval-state': cmd_eval_state,
    'eval-agentic': cmd_eval_agentic,
    'eval-dynamic': cmd_eval_dynamic,
    'report': cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='togglebench',
                                     description='State-aware toggle benchmark for GUI agents')
    parser.add_argument('--config', type=str, default=None, help='Config file path (default: ./config.yaml if present)')
    parser.add_argument('--seed', type=int, default=0, help='Seed for every random choice')
    parser.add_argument('--output-dir', type=str, default='outputs', help='Directory all outputs go to')
    parser.add_argument('--log-level', type=str, default=None, help='DEBUG, INFO, WARNING or ERROR')
    sub = parser.add_subparsers(dest='command', required=True)

    def with_dialect(p):
        p.add_argument('--dialect', type=str, default=None, choices=list_dialects(),
                       help='Action text dialect')

    def with_eval(p):
        with_dialect(p)
        p.add_argument('--predictions', type=str, help='Prediction JSONL file')
        p.add_argument('--click-threshold', type=str, default=None,
                       help=f"Relative distance threshold or preset ({', '.join(PRESETS)})")
        p.add_argument('--distance-metric', type=str, default=None, choices=sorted(DISTANCE_METRICS))
        p.add_argument('--report-format', type=str, default=None, choices=REPORT_FORMATS)
        p.add_argument('--strict', action='store_true',
                       help='Score missing predictions as non-matches instead of failing')

    p = sub.add_parser('build', help='Expand quadruplets into samples and split')
    p.add_argument('--quadruplets', type=str, help='Quadruplet JSONL file')
    p.add_argument('--ratio', type=float, default=None, help='Train share of quadruplets (default 0.9)')
    p.add_argument('--templates', type=str, default=None, help='Instruction template YAML')
    p.add_argument('--paraphrase', action='store_true', default=None, help='Use paraphrased instructions')

    p = sub.add_parser('annotate', help='Run the two-annotator agreement pipeline')
    p.add_argument('--records', type=str, help='Screen record JSONL file')
    p.add_argument('--mock-annotators', type=str, default=None, help='Scripted annotator YAML instead of HTTP')
    p.add_argument('--restart', action='store_true', help='Discard the checkpoint and start over')
    p.add_argument('--strict-feature-match', action='store_true', default=None,
                   help='Compare feature names without case/whitespace folding')

    p = sub.add_parser('star-synth', help='Synthesize state-aware reasoning training data')
    with_dialect(p)
    p.add_argument('--samples', type=str, help='Sample JSONL file')
    p.add_argument('--episodes', type=str, help='Episode JSONL file')
    p.add_argument('--toggle-annotations', type=str, help='Toggle step sidecar JSONL for episodes')
    p.add_argument('--templates', type=str, default=None, help='Reasoning template YAML')
    p.add_argument('--history-mode', type=str, default=None, choices=HISTORY_MODES)

    p = sub.add_parser('eval-state', help='Score state-control predictions')
    p.add_argument('--samples', type=str, help='Sample JSONL file')
    with_eval(p)

    p = sub.add_parser('eval-agentic', help='Score agentic episode predictions')
    p.add_argument('--episodes', type=str, help='Episode JSONL file')
    with_eval(p)

    p = sub.add_parser('eval-dynamic', help='Run the dynamic task suite against an agent')
    with_dialect(p)
    p.add_argument('--agent', type=str, help="'optimal', 'always-toggle', an http(s) URL or a command")
    p.add_argument('--tasks', type=str, default=None, help='Comma-separated task ids (default: all)')
    p.add_argument('--budget', type=int, default=None, help='Step budget per episode (default 15)')

    p = sub.add_parser('report', help='Compare saved JSON-lines reports')
    p.add_argument('inputs', nargs='*', help='NAME=PATH report files')
    p.add_argument('--report-format', type=str, default=None, choices=REPORT_FORMATS)
    return parser


def make_run_config(args) -> RunConfig:
    path = args.config
    if path is None and Path('config.yaml').exists():
        path = 'config.yaml'
    sections = load_config(path)
    cfg = RunConfig(
        subcommand=args.command,
        output_dir=Path(args.output_dir),
        seed=args.seed,
        log_level=args.log_level or sections['logging']['level'],
        sections=sections,
    )
    flags = [
        ('actions', 'dialect', 'dialect'),
        ('matching', 'click_threshold', 'click_threshold'),
        ('matching', 'distance_metric', 'distance_metric'),
        ('report', 'format', 'report_format'),
        ('annotation', 'strict_feature_match', 'strict_feature_match'),
        ('builder', 'ratio', 'ratio'),
        ('builder', 'paraphrase', 'paraphrase'),
        ('star', 'history_mode', 'history_mode'),
        ('simulation', 'budget', 'budget'),
    ]
    for section, key, attr in flags:
        cfg.override(section, key, getattr(args, attr, None))
    if args.command in ('build', 'star-synth'):
        section = 'builder' if args.command == 'build' else 'star'
        cfg.override(section, 'templates', args.templates)

    if cfg['report']['format'] not in REPORT_FORMATS:
        raise ConfigError(f"Unknown report format '{cfg['report']['format']}'")
    if cfg['actions']['dialect'] not in list_dialects():
        raise ConfigError(f"Unknown dialect '{cfg['actions']['dialect']}'")
    if cfg['simulation']['budget'] < 1:
        raise ConfigError("Step budget must be at least 1")
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_run_config(args)
        log_file = cfg.output_dir / 'run.log' if cfg['logging']['save_logs'] else None
        setup_logging(cfg.log_level, log_file, cfg['logging']['format'])
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](args, cfg)
    except (ConfigError, UnknownTaskError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AgentSpawnError as e:
        print(f"Agent could not be started: {e}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except MissingPredictionError as e:
        print(f"{e}\nRerun with --strict to score them as non-matches.", file=sys.stderr)
        return EXIT_RUNTIME
    except (ToggleBenchError, OSError, ValueError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    banner(f"{args.command.upper()} COMPLETE")
    return code


if __name__ == "__main__":
    sys.exit(main())
