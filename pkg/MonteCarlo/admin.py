from django.contrib import admin
from import_export import resources
from import_export.admin import ExportMixin

from .engine import SHOT_TABLE_HEADERS
from .models import EnsembleRun, ShotResult


class ShotResultResource(resources.ModelResource):
    """Shot export with the same columns as the `mc run` CSV."""

    class Meta:
        model = ShotResult
        fields = ('run__run_id',) + SHOT_TABLE_HEADERS
        export_order = ('run__run_id',) + SHOT_TABLE_HEADERS


class ShotResultInline(admin.TabularInline):
    model = ShotResult
    extra = 0
    can_delete = False
    readonly_fields = ('shot', 'true_jz', 'cond_mean', 'cond_var', 'outcome', 'scattered')
    fields = readonly_fields
    max_num = 0


@admin.register(EnsembleRun)
class EnsembleRunAdmin(admin.ModelAdmin):
    list_display = ('run_id', 'preset', 'n_atoms', 'shots', 'theta_rad',
                    'variance_of_outcome', 'model_variance', 'created_at')
    list_filter = ('preset', 'created_at')
    search_fields = ('run_id', 'preset')
    readonly_fields = ('run_id', 'created_at')
    ordering = ('-created_at',)
    inlines = [ShotResultInline]

    fieldsets = (
        ('Run', {
            'fields': ('run_id', 'preset', 'master_seed', 'shots', 'theta_rad', 'n_atoms', 'created_at')
        }),
        ('Outcome', {
            'fields': ('variance_of_outcome', 'variance_se', 'variance_ci_low', 'variance_ci_high',
                       'model_variance', 'mean_outcome', 'histogram')
        }),
        ('Conditional state', {
            'fields': ('mean_conditional_var', 'var_conditional_mean', 'mean_contrast_multiplier')
        }),
        ('Configuration', {
            'fields': ('config',),
            'classes': ('collapse',)
        }),
    )


@admin.register(ShotResult)
class ShotResultAdmin(ExportMixin, admin.ModelAdmin):
    resource_classes = [ShotResultResource]
    list_display = ('run', 'shot', 'true_jz', 'cond_mean', 'cond_var', 'outcome', 'scattered')
    list_filter = ('run',)
    ordering = ('run', 'shot')
