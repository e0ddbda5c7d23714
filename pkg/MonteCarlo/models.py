import uuid

from django.core.validators import MinValueValidator
from django.db import models, transaction


class EnsembleRun(models.Model):
    """
    One stored Monte Carlo ensemble (an `mc run --save`).
    """
    run_id = models.CharField(
        max_length=20,
        unique=True,
        blank=True,
        help_text="Unique run identifier (e.g., RUN-1A2B3C4D)"
    )
    preset = models.CharField(max_length=50, blank=True)
    config = models.JSONField(help_text="Resolved run configuration")

    master_seed = models.BigIntegerField()
    shots = models.PositiveIntegerField(validators=[MinValueValidator(2)])
    theta_rad = models.FloatField(default=0.0)
    n_atoms = models.PositiveIntegerField()

    # Outcome statistics (rad²)
    variance_of_outcome = models.FloatField()
    variance_se = models.FloatField()
    variance_ci_low = models.FloatField()
    variance_ci_high = models.FloatField()
    model_variance = models.FloatField(help_text="Analytic variance of the outcome")
    mean_outcome = models.FloatField()
    histogram = models.JSONField(default=dict)

    # Conditional J_z statistics after the last squeezing pulse
    mean_conditional_var = models.FloatField()
    var_conditional_mean = models.FloatField()
    mean_contrast_multiplier = models.FloatField(default=1.0)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['run_id'], name='montecarlo_run_id_idx'),
            models.Index(fields=['preset'], name='montecarlo_preset_idx'),
            models.Index(fields=['created_at'], name='montecarlo_created_idx'),
        ]

    def save(self, *args, **kwargs):
        if not self.run_id:
            self.run_id = f"RUN-{uuid.uuid4().hex[:8].upper()}"
        super().save(*args, **kwargs)

    def __str__(self):
        return f"Run {self.run_id} - {self.shots} shots, theta={self.theta_rad:.3g}"

    @classmethod
    def record(cls, stats, config, preset='', theta_rad=0.0):
        """Store ``stats`` (an EnsembleStats) and its shot records."""
        with transaction.atomic():
            run = cls.objects.create(
                preset=preset or '',
                config=config,
                master_seed=stats.seed,
                shots=stats.shots,
                theta_rad=theta_rad,
                n_atoms=config['ensemble']['n_atoms'],
                variance_of_outcome=stats.variance_of_outcome,
                variance_se=stats.variance_se,
                variance_ci_low=stats.variance_ci[0],
                variance_ci_high=stats.variance_ci[1],
                model_variance=stats.model_variance,
                mean_outcome=stats.mean_outcome,
                histogram=stats.histogram,
                mean_conditional_var=stats.mean_conditional_var,
                var_conditional_mean=stats.var_conditional_mean,
                mean_contrast_multiplier=stats.mean_contrast_multiplier,
            )
            ShotResult.objects.bulk_create([
                ShotResult(
                    run=run,
                    shot=r.shot,
                    true_jz=r.true_jz,
                    cond_mean=r.conditional_mean,
                    cond_var=r.conditional_var,
                    outcome=r.final_outcome,
                    scattered=r.scattered_count,
                )
                for r in stats.records
            ])
        return run


class ShotResult(models.Model):
    run = models.ForeignKey(EnsembleRun, on_delete=models.CASCADE, related_name='shot_results')
    shot = models.PositiveIntegerField()
    true_jz = models.FloatField()
    cond_mean = models.FloatField()
    cond_var = models.FloatField()
    outcome = models.FloatField(help_text="Difference of window means (rad)")
    scattered = models.PositiveIntegerField(default=0)

    class Meta:
        ordering = ['run', 'shot']
        verbose_name = "Shot Result"
        verbose_name_plural = "Shot Results"
        constraints = [
            models.UniqueConstraint(fields=['run', 'shot'], name='unique_shot_per_run'),
        ]

    def __str__(self):
        return f"{self.run.run_id} shot {self.shot}"
