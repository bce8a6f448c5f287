from .csv_blocks import csv_block, write_csv_block, read_csv_block
from .formatter import format_checks, format_header
from .summary import ReportWriter, load_report
