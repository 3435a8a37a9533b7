import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('uuid', models.UUIDField(db_index=True, default=uuid.uuid4, editable=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('name', models.CharField(max_length=200)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('network', models.CharField(choices=[('case33', 'case33'), ('case69', 'case69'), ('case118', 'case118')], max_length=20)),
                ('mode', models.CharField(choices=[('mbo_accurate', 'mbo_accurate'), ('mbo_reference', 'mbo_reference'), ('sac', 'sac'), ('rm_sac_wide', 'rm_sac_wide'), ('rm_sac', 'rm_sac')], max_length=20)),
                ('lambda_scale', models.FloatField(blank=True, null=True)),
                ('impedance_factor', models.FloatField()),
                ('days', models.PositiveIntegerField()),
                ('seed', models.IntegerField()),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', max_length=20)),
                ('config', models.JSONField(default=dict)),
                ('metrics_path', models.CharField(blank=True, max_length=500)),
                ('steps', models.PositiveIntegerField(default=0)),
                ('final_train_reward', models.FloatField(blank=True, null=True)),
                ('final_test_reward', models.FloatField(blank=True, null=True)),
                ('final_test_ploss', models.FloatField(blank=True, null=True)),
                ('final_test_violation', models.FloatField(blank=True, null=True)),
                ('final_critic_loss', models.FloatField(blank=True, null=True)),
                ('error_message', models.TextField(blank=True)),
            ],
            options={
                'db_table': 'experiment_runs',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['-created_at'], name='experiment_runs_created_idx'), models.Index(fields=['network', 'mode'], name='experiment_runs_case_mode_idx')],
            },
        ),
    ]
