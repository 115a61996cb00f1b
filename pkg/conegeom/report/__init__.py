from .template import CheckRecord, render_lpball_table, render_summary
