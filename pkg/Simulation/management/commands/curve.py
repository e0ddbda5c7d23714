import logging

import tablib

from Simulation.services import (
    antisqueezing_mc, antisqueezing_table, headroom_table, rotation_noise_table, slope_ratio,
)
from ._base import SimulationCommand

logger = logging.getLogger(__name__)

CURVES = ('rotation-noise', 'antisqueezing', 'headroom')


class Command(SimulationCommand):
    help = "Emit an analytic curve: rotation-noise, antisqueezing or headroom"

    def add_arguments(self, parser):
        parser.add_argument('kind', choices=CURVES)
        parser.add_argument(
            '--mc', action='store_true',
            help="antisqueezing only: fit Monte Carlo ensembles instead of the closed form",
        )
        super().add_arguments(parser)

    def run(self, cfg, options):
        kind = options['kind']
        if kind == 'rotation-noise':
            return rotation_noise_table(cfg)
        if kind == 'headroom':
            return headroom_table(cfg)

        if options['mc']:
            mc = cfg.mc
            rows, slopes = antisqueezing_mc(cfg, mc['shots'], mc['master_seed'], mc['workers'])
        else:
            rows, slopes = antisqueezing_table(cfg)
        ratio = slope_ratio(slopes)
        if ratio is not None:
            logger.info("antisqueezing slope ratio %.6g", ratio)
        rows.title = 'antisqueezing'
        slopes.title = 'slopes'
        summary = tablib.Dataset(headers=['quantity', 'value'], title='summary')
        summary.append(('slope_ratio', ratio))
        return tablib.Databook((rows, slopes, summary))
