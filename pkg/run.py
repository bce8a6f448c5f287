import argparse
import logging
import sys
from src.cli import cmd_run, cmd_corrector, cmd_report, cmd_dump_field

# Configure Logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def _add_ensemble_args(parser):
  parser.add_argument('--d', type=int, default=2, help='Lattice dimension (2 or 3)')
  parser.add_argument('--L', type=int, default=32, help='Torus side length (power of two)')
  parser.add_argument('--seed', type=int, default=0, help='Master seed')
  parser.add_argument('--index', type=int, default=0, help='Sample index')
  parser.add_argument('--kind', default='bernoulli', choices=['bernoulli', 'uniform', 'block'],
                      help='Ensemble kind')
  parser.add_argument('--lambda', dest='lam', type=float, default=0.25, help='Ellipticity ratio')
  parser.add_argument('--p', type=float, default=0.5, help='Bernoulli probability of the low conductance')
  parser.add_argument('--block-size', type=int, default=None, help='Block size for the block ensemble')


def main(argv=None):
  parser = argparse.ArgumentParser(description="Stochastic Homogenization Lab")
  parser.add_argument('--log-level', default=None, help='Override the log level (DEBUG, INFO, ...)')
  subparsers = parser.add_subparsers(dest='command', help='Command to run')

  # Run Command
  run_parser = subparsers.add_parser('run', help='Run one configured experiment')
  run_parser.add_argument(
    '--config', default='config/default.yaml', help='Path to config file')
  run_parser.add_argument(
    '--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
    help='Override a config key (repeatable)')
  run_parser.add_argument('--workers', type=int, default=None, help='Worker processes')
  run_parser.add_argument('--output-dir', default=None, help='Override output.dir')

  # Corrector Command
  corrector_parser = subparsers.add_parser('corrector', help='Write one extended corrector bundle')
  _add_ensemble_args(corrector_parser)
  corrector_parser.add_argument('--T', default='inf', help="Massive cutoff T, or 'inf'")
  corrector_parser.add_argument('--direction', type=int, default=0, help='Direction e_i')
  corrector_parser.add_argument('--tol', type=float, default=1e-9, help='CG relative tolerance')
  corrector_parser.add_argument('--out', required=True, help='Bundle directory')

  # Report Command
  report_parser = subparsers.add_parser('report', help='Summarize a run directory')
  report_parser.add_argument('run_dir', help='Run directory containing report.json')
  report_parser.add_argument('--csv', action='store_true', help='Print only the CSV blocks')

  # Dump Field Command
  dump_parser = subparsers.add_parser('dump-field', help='Write or inspect a lattice field file')
  _add_ensemble_args(dump_parser)
  dump_parser.add_argument('path', help='Field file (.hlf)')
  dump_parser.add_argument('--inspect', action='store_true', help='Summarize an existing file')

  args = parser.parse_args(argv)
  if args.log_level:
    logging.getLogger().setLevel(args.log_level.upper())

  if args.command == 'run':
    return cmd_run(args.config, args.overrides, args.workers, args.output_dir, args.log_level)
  elif args.command == 'corrector':
    return cmd_corrector(args.out, args.d, args.L, args.T, args.seed, args.index, args.direction,
                         args.kind, args.lam, args.p, args.block_size, args.tol)
  elif args.command == 'report':
    return cmd_report(args.run_dir, args.csv)
  elif args.command == 'dump-field':
    return cmd_dump_field(args.path, args.inspect, args.d, args.L, args.seed, args.index,
                          args.kind, args.lam, args.p, args.block_size)
  else:
    parser.print_help()
    return 1


if __name__ == "__main__":
  sys.exit(main())
