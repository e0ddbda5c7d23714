from Simulation.services import sweep_table
from ._base import SimulationCommand


class Command(SimulationCommand):
    help = "Evaluate the cartesian product of the config's sweep section, one row per point"

    def run(self, cfg, options):
        return sweep_table(cfg)
