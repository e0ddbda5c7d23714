from django.contrib import admin
from django.urls import path, include
from django.http import JsonResponse


def api_root(request):
    return JsonResponse({
        'message': 'QND Squeezing Simulator API',
        'status': 'running',
        'endpoints': {
            'admin': '/admin/',
            'presets': '/api/presets/',
            'derive': '/api/derive/',
            'rotation_noise': '/api/curves/rotation-noise/',
            'antisqueezing': '/api/curves/antisqueezing/',
            'runs': '/api/runs/',
        }
    })


urlpatterns = [
    path('', api_root, name='api-root'),
    path('api/', api_root, name='api-index'),
    path('admin/', admin.site.urls),
    path('api/runs/', include('MonteCarlo.urls')),
    path('api/', include('Simulation.urls')),
]
