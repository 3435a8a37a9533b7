from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('harness', '0001_initial'),
    ]

    operations = [
        migrations.AddField(
            model_name='experimentrun',
            name='clamp_events',
            field=models.PositiveIntegerField(default=0),
        ),
    ]
