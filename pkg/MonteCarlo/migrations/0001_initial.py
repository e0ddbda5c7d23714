# Generated by Django 5.2.6 on 2026-10-17 09:00

import django.core.validators
import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='EnsembleRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(blank=True, help_text='Unique run identifier (e.g., RUN-1A2B3C4D)', max_length=20, unique=True)),
                ('preset', models.CharField(blank=True, max_length=50)),
                ('config', models.JSONField(help_text='Resolved run configuration')),
                ('master_seed', models.BigIntegerField()),
                ('shots', models.PositiveIntegerField(validators=[django.core.validators.MinValueValidator(2)])),
                ('theta_rad', models.FloatField(default=0.0)),
                ('n_atoms', models.PositiveIntegerField()),
                ('variance_of_outcome', models.FloatField()),
                ('variance_se', models.FloatField()),
                ('variance_ci_low', models.FloatField()),
                ('variance_ci_high', models.FloatField()),
                ('model_variance', models.FloatField(help_text='Analytic variance of the outcome')),
                ('mean_outcome', models.FloatField()),
                ('histogram', models.JSONField(default=dict)),
                ('mean_conditional_var', models.FloatField()),
                ('var_conditional_mean', models.FloatField()),
                ('mean_contrast_multiplier', models.FloatField(default=1.0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['run_id'], name='montecarlo_run_id_idx'), models.Index(fields=['preset'], name='montecarlo_preset_idx'), models.Index(fields=['created_at'], name='montecarlo_created_idx')],
            },
        ),
        migrations.CreateModel(
            name='ShotResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('shot', models.PositiveIntegerField()),
                ('true_jz', models.FloatField()),
                ('cond_mean', models.FloatField()),
                ('cond_var', models.FloatField()),
                ('outcome', models.FloatField(help_text='Difference of window means (rad)')),
                ('scattered', models.PositiveIntegerField(default=0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='shot_results', to='MonteCarlo.ensemblerun')),
            ],
            options={
                'verbose_name': 'Shot Result',
                'verbose_name_plural': 'Shot Results',
                'ordering': ['run', 'shot'],
                'constraints': [models.UniqueConstraint(fields=('run', 'shot'), name='unique_shot_per_run')],
            },
        ),
    ]
