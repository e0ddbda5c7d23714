import logging

from django.core.management.base import BaseCommand, CommandError

from qndsim.exceptions import ConfigValidationError, QndsimError, SequenceValidationError
from Simulation.config import read_config, validate_config
from Simulation.emit import emit

logger = logging.getLogger(__name__)

VALIDATION_EXIT = 2
RUNTIME_EXIT = 3


class SimulationCommand(BaseCommand):
    """
    Shared options for the simulation commands. Subclasses implement
    ``run(cfg, options)`` and return what should be emitted.

    Exit status: 0 on success, 2 on validation errors, 3 on runtime errors.
    """
    def add_arguments(self, parser):
        parser.add_argument('--config', help="Run config JSON file")
        parser.add_argument('--preset', help="Use a shipped preset (instead of, or under, --config)")
        parser.add_argument('--seed', type=int, help="Master seed (mc.master_seed)")
        parser.add_argument('--shots', type=int, help="Shots per ensemble (mc.shots)")
        parser.add_argument('--workers', type=int, help="Worker threads (mc.workers)")
        parser.add_argument('--theta', type=float, help="Final rotation angle in rad (model.theta_rad)")
        parser.add_argument('--out', help="Output path (default: stdout)")
        parser.add_argument('--format', choices=['csv', 'json'], help="Output format")

    def overrides(self, options):
        mapping = {
            'seed': 'mc.master_seed',
            'shots': 'mc.shots',
            'workers': 'mc.workers',
            'theta': 'model.theta_rad',
            'out': 'output.path',
            'format': 'output.format',
        }
        return {path: options[key] for key, path in mapping.items() if options.get(key) is not None}

    def load(self, options):
        if not options.get('config') and not options.get('preset'):
            raise CommandError("one of --config or --preset is required", returncode=VALIDATION_EXIT)
        source = read_config(options['config']) if options.get('config') else {}
        if options.get('preset'):
            source['preset'] = options['preset']
        return validate_config(source, self.overrides(options))

    def handle(self, *args, **options):
        try:
            cfg = self.load(options)
            logger.info("%s started (preset=%s)", self.__module__.rsplit('.', 1)[-1], cfg.preset or '-')
            payload = self.run(cfg, options)
            fmt = options.get('format') or cfg.output['format']
            emit(payload, fmt, cfg.output['path'], self.stdout)
            logger.info("%s finished", self.__module__.rsplit('.', 1)[-1])
        except ConfigValidationError as e:
            for path, message in e.errors:
                self.stderr.write(f"{path}: {message}")
            raise CommandError("invalid configuration", returncode=VALIDATION_EXIT)
        except SequenceValidationError as e:
            raise CommandError(f"invalid sequence: {e}", returncode=VALIDATION_EXIT)
        except (QndsimError, ValueError) as e:
            logger.exception("run failed")
            raise CommandError(str(e), returncode=RUNTIME_EXIT)

    def run(self, cfg, options):
        raise NotImplementedError
