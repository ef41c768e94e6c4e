"""Background-summary workbench for news event timelines.

Subpackages cover the pipeline end to end: timeline data model and
merging (`timeline`), from-scratch ROUGE and annotator agreement
(`rouge`), the chat-completion gateway (`gateway`), background
generation (`generate`), the QA-based utility metric (`bus`), best-worst
scaling aggregation (`bws`), evaluation-item sampling (`sampling`), the
local annotation service (`service`), and the CLI (`cli`).
"""

__version__ = "0.1.0"
