import logging

from rest_framework import status
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from qndsim.exceptions import ConfigValidationError, QndsimError
from .config import config_error_response, validate_config
from .presets import DESCRIPTIONS, PRESETS
from .services import antisqueezing_table, derive_table, rotation_noise_table, slope_ratio

logger = logging.getLogger(__name__)


def _run(request, compute, failure_message):
    """Validate the posted config, run ``compute(cfg)`` and wrap the result."""
    try:
        if not isinstance(request.data, dict):
            raise ConfigValidationError([('/', "config must be a JSON object")])
        cfg = validate_config(dict(request.data))
        return Response({'success': True, **compute(cfg)})
    except ConfigValidationError as e:
        return Response(config_error_response(e), status=status.HTTP_400_BAD_REQUEST)
    except (QndsimError, ValueError) as e:
        logger.warning("%s: %s", failure_message, e)
        return Response({
            'success': False,
            'message': failure_message,
            'error': str(e),
        }, status=status.HTTP_400_BAD_REQUEST)


@api_view(['GET'])
@permission_classes([AllowAny])
def preset_list(request):
    """
    GET: Shipped presets with the figure each one reproduces
    """
    return Response({
        'success': True,
        'presets': [
            {'name': name, 'description': DESCRIPTIONS.get(name, '')}
            for name in sorted(PRESETS)
        ],
    })


@api_view(['POST'])
@permission_classes([AllowAny])
def derive(request):
    """
    POST: Derived cavity, coupling and calibration quantities for a run config
    """
    return _run(request, lambda cfg: {
        'preset': cfg.preset,
        'quantities': derive_table(cfg).dict,
    }, 'Failed to derive quantities')


@api_view(['POST'])
@permission_classes([AllowAny])
def rotation_noise_curve(request):
    """
    POST: Outcome variance versus final rotation angle
    """
    return _run(request, lambda cfg: {
        'curve': rotation_noise_table(cfg).dict,
    }, 'Failed to compute rotation-noise curve')


@api_view(['POST'])
@permission_classes([AllowAny])
def antisqueezing_curve(request):
    """
    POST: Normalized antisqueezing versus atom number for each probe power
    """
    def compute(cfg):
        rows, slopes = antisqueezing_table(cfg)
        return {
            'curve': rows.dict,
            'slopes': slopes.dict,
            'slope_ratio': slope_ratio(slopes),
        }
    return _run(request, compute, 'Failed to compute antisqueezing curve')
