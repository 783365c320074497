from django.contrib import admin
from .models import ExperimentReport


@admin.register(ExperimentReport)
class ExperimentReportAdmin(admin.ModelAdmin):
    """Admin interface for persisted experiment reports"""

    list_display = [
        'report_id',
        'command',
        'passed',
        'exit_code',
        'created_at',
    ]

    list_filter = ['command', 'passed', 'created_at']
    search_fields = ['report_id', 'command']
    readonly_fields = ['report_id', 'created_at']

    fieldsets = (
        ('Run', {
            'fields': ('report_id', 'command', 'passed', 'exit_code')
        }),
        ('Payload', {
            'fields': ('config', 'summary')
        }),
        ('Metadata', {
            'fields': ('created_at',)
        }),
    )
