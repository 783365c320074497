# Generated by Django 5.2.8 on 2026-10-18 09:41

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentReport",
            fields=[
                (
                    "report_id",
                    models.CharField(
                        editable=False,
                        max_length=32,
                        primary_key=True,
                        serialize=False,
                        unique=True,
                    ),
                ),
                (
                    "command",
                    models.CharField(
                        choices=[
                            ("simulate", "Simulate"),
                            ("lp", "LP"),
                            ("lowerbound", "Lower bound"),
                            ("constants", "Constants"),
                        ],
                        max_length=20,
                    ),
                ),
                ("config", models.JSONField(default=dict)),
                ("summary", models.JSONField(default=dict)),
                ("passed", models.BooleanField(default=True)),
                ("exit_code", models.IntegerField(default=0)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "db_table": "experiment_reports",
                "ordering": ["-created_at", "-report_id"],
            },
        ),
    ]
