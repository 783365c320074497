from django.db import models
from django.db import transaction
from datetime import datetime


class ExperimentReport(models.Model):
    """A persisted simulate / lp / lowerbound / constants run"""

    COMMAND_CHOICES = [
        ('simulate', 'Simulate'),
        ('lp', 'LP'),
        ('lowerbound', 'Lower bound'),
        ('constants', 'Constants'),
    ]

    report_id = models.CharField(max_length=32, primary_key=True, unique=True, editable=False)
    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    config = models.JSONField(default=dict)
    summary = models.JSONField(default=dict)
    passed = models.BooleanField(default=True)
    exit_code = models.IntegerField(default=0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'experiment_reports'
        ordering = ['-created_at', '-report_id']

    def save(self, *args, **kwargs):
        """Override save to auto-generate a sequential report_id"""
        if not self.report_id:
            self.report_id = self._generate_sequential_report_id()
        super().save(*args, **kwargs)

    def _generate_sequential_report_id(self):
        """
        Generate sequential report_id with format: EXP-YYYYMM-NNN
        Example: EXP-202610-001, EXP-202610-002, etc.
        """
        prefix = f"EXP-{datetime.now().strftime('%Y%m')}-"

        with transaction.atomic():
            latest = ExperimentReport.objects.filter(
                report_id__startswith=prefix
            ).order_by('-report_id').first()

            sequence = int(latest.report_id.split('-')[-1]) + 1 if latest else 1
            report_id = f"{prefix}{sequence:03d}"

            while ExperimentReport.objects.filter(report_id=report_id).exists():
                sequence += 1
                report_id = f"{prefix}{sequence:03d}"

            return report_id

    def __str__(self):
        outcome = 'passed' if self.passed else f'failed ({self.exit_code})'
        return f"{self.report_id} {self.command} {outcome}"
