import dataclasses
from typing import Dict, List, Optional, Sequence

import pandas as pd
from jinja2 import Environment, PackageLoader, select_autoescape


@dataclasses.dataclass
class CheckRecord:
    """One identity or inequality check: passes when `value` is at most `threshold`."""
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data['passed'] = self.passed
        return data


def _environment() -> Environment:
    return Environment(loader=PackageLoader('conegeom', 'report'),
                       autoescape=select_autoescape(['html', 'xml']),
                       trim_blocks=True)


def render_summary(checks: Sequence[CheckRecord], subcommand: str = 'all',
                   errors: Optional[List[Dict[str, str]]] = None) -> str:
    """Markdown table of checks with a pass count, followed by any errors.

    :param checks: The checks that ran.
    :param subcommand: Heading of the summary.
    :param errors: Records with `type` and `message` keys.
    :return: The rendered Markdown.
    """
    template = _environment().get_template('summary.md.j2')
    return template.render(subcommand=subcommand, checks=list(checks), errors=errors or [])


def render_lpball_table(df: pd.DataFrame) -> str:
    """Markdown table from a frame with columns n, r, omega, log_omega."""
    template = _environment().get_template('lpball_table.md.j2')
    return template.render(rows=df.to_dict(orient='records'))
