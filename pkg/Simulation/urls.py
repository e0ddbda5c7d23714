from django.urls import path
from . import views

urlpatterns = [
    path('presets/', views.preset_list, name='preset-list'),
    path('derive/', views.derive, name='derive'),
    path('curves/rotation-noise/', views.rotation_noise_curve, name='curve-rotation-noise'),
    path('curves/antisqueezing/', views.antisqueezing_curve, name='curve-antisqueezing'),
]
