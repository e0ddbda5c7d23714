from Simulation.services import derive_table
from ._base import SimulationCommand


class Command(SimulationCommand):
    help = "Print the derived cavity, coupling and calibration quantities"

    def run(self, cfg, options):
        return derive_table(cfg)
