from MonteCarlo.engine import shot_table
from MonteCarlo.models import EnsembleRun
from Simulation.services import mc_run
from ._base import SimulationCommand


class Command(SimulationCommand):
    """
    ``mc run``: one Monte Carlo ensemble at the configured setting.

    JSON output is the ensemble summary; CSV output is one row per shot.
    """
    help = "Run a Monte Carlo ensemble of shots"

    def add_arguments(self, parser):
        parser.add_argument('action', choices=['run'])
        parser.add_argument('--save', action='store_true', help="Store the run in the database")
        super().add_arguments(parser)

    def run(self, cfg, options):
        stats = mc_run(cfg)
        self.stderr.write(
            f"{stats.shots} shots: Var(outcome)={stats.variance_of_outcome:.6g} "
            f"(model {stats.model_variance:.6g})"
        )
        if options['save']:
            run = EnsembleRun.record(stats, cfg.to_dict(), preset=cfg.preset, theta_rad=cfg.theta)
            self.stderr.write(self.style.SUCCESS(f"saved {run.run_id}"))

        fmt = options.get('format') or cfg.output['format']
        if fmt == 'csv':
            return shot_table(stats)
        payload = stats.to_dict()
        payload.update({
            'preset': cfg.preset,
            'theta_rad': cfg.theta,
            'n_atoms': cfg.n_atoms,
        })
        return payload
