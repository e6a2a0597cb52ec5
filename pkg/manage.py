import sys
import click

from risbeam.errors import BudgetExceededError, RisBeamError, ValidationError
from risbeam.models import ExperimentSpec
from risbeam.services import ExperimentService
from risbeam.util import configure_logging

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_BUDGET = 4


def common_options(func):
    """Options shared by every command"""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='INI config file'),
        click.option('--profile', help='Profile: desk, testing or full (default from RISBEAM_ENV)'),
        click.option('--out', 'out_dir', default='out', show_default=True, help='Output directory'),
        click.option('--seed', type=int, help='Master seed for data, training and baselines'),
        click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                     help='Override a config key, e.g. --set system.N=32'),
        click.option('--manifest', type=click.Path(dir_okay=False), help='Rerun from a recorded manifest'),
        click.option('-v', '--verbose', count=True, help='-v for INFO, -vv for DEBUG'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_spec(command, config_path, profile, out_dir, seed, overrides, manifest, **extra):
    """ExperimentSpec from command-line options, or from a manifest when given"""
    options = {k: v for k, v in extra.pop('options', {}).items() if v is not None}
    if manifest:
        spec = ExperimentService.load_manifest(manifest, out_dir=out_dir)
        if spec.command != command:
            raise ValidationError(f"manifest records command {spec.command}, not {command}")
        spec.options.update(options)
        if extra.get('dataset'):
            spec.dataset = extra['dataset']
        if extra.get('checkpoint'):
            spec.checkpoint = extra['checkpoint']
        return spec
    return ExperimentSpec(
        command=command, out_dir=out_dir, config_path=config_path, profile=profile, seed=seed,
        overrides=tuple(overrides), options=options, **extra,
    )


def run_command(command, verbose, **kwargs):
    """Run one harness command and map errors to exit codes"""
    configure_logging(verbose)
    try:
        spec = build_spec(command, **kwargs)
        result = ExperimentService.run(spec)
    except BudgetExceededError as e:
        click.echo(f"{command}: refused: {e}", err=True)
        sys.exit(EXIT_BUDGET)
    except RisBeamError as e:
        click.echo(f"{command}: invalid input: {e}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as e:
        click.echo(f"{command}: I/O error: {e}", err=True)
        sys.exit(EXIT_IO)
    for message in result.get('warnings', []):
        click.echo(f"warning: {message}", err=True)
    for key in ('dataset', 'checkpoint', 'history', 'pretrain_history', 'report', 'eval', 'summary', 'sweep', 'manifest'):
        if key in result:
            click.echo(f"{key}: {result[key]}")
    return result


@click.group()
def cli():
    """RIS beamforming experiments"""


@cli.command('gen-data')
@common_options
def gen_data(verbose, **kwargs):
    """Generate a channel dataset file"""
    run_command('gen-data', verbose, **kwargs)


@cli.command('train')
@common_options
@click.option('--dataset', type=click.Path(dir_okay=False), help='Dataset file (generated in memory if omitted)')
@click.option('--loss', type=click.Choice(['perfect', 'penalized', 'averaged', 'averaged+penalized']),
              help='Loss kind (shortcut for --set training.loss_kind=...)')
def train(verbose, loss, overrides, **kwargs):
    """Train the network with the configured loss"""
    if loss:
        overrides = tuple(overrides) + (f"training.loss_kind={loss}",)
    result = run_command('train', verbose, overrides=overrides, **kwargs)
    metrics = result['metrics']
    click.echo(f"validation WSR soft {metrics['wsr_soft']:.4f} hard {metrics['wsr_hard']:.4f}")


@cli.command('search-c')
@common_options
@click.option('--dataset', type=click.Path(dir_okay=False))
@click.option('--c-init', type=float, help='Initial steepness (default: quantizer.c)')
def search_c(verbose, c_init, **kwargs):
    """Comparative search for the quantizer steepness c"""
    result = run_command('search-c', verbose, options={'c_init': c_init}, **kwargs)
    click.echo(f"best c: {result['best_c']:g}")


@cli.command('idqnn')
@common_options
@click.option('--dataset', type=click.Path(dir_okay=False))
def idqnn(verbose, **kwargs):
    """Pre-train, derive the penalty weight and retrain with the penalty"""
    result = run_command('idqnn', verbose, **kwargs)
    click.echo(f"lambda: {result['lam']:.4f}")


@cli.command('eval')
@common_options
@click.option('--checkpoint', type=click.Path(dir_okay=False), help='Checkpoint to score')
@click.option('--dataset', type=click.Path(dir_okay=False))
@click.option('--oracle/--no-oracle', default=None,
              help='Force or skip the exhaustive oracle column (default: when within budget)')
def evaluate(verbose, oracle, **kwargs):
    """Score a checkpoint on the test split against the baselines"""
    result = run_command('eval', verbose, options={'oracle': oracle}, **kwargs)
    summary = result['summary']
    click.echo(f"test WSR soft {summary['wsr_soft']:.4f} hard {summary['wsr_hard']:.4f} "
               f"random {summary['wsr_random']:.4f}")


@cli.command('sweep')
@common_options
@click.option('--axis', type=click.Choice(['pt_dbm', 'n', 'eta']))
@click.option('--values', help='Comma-separated axis values')
@click.option('--mode', type=click.Choice(['baselines', 'train']))
@click.option('--parallel/--sequential', default=None, help='Run sweep points concurrently')
def sweep(verbose, axis, values, mode, parallel, **kwargs):
    """Sweep transmit power, RIS size or CSI error and aggregate WSR per point"""
    options = {'axis': axis, 'values': values, 'mode': mode, 'parallel': parallel}
    result = run_command('sweep', verbose, options=options, **kwargs)
    click.echo(f"{len(result['rows'])} sweep points")


if __name__ == '__main__':
    cli()
