import json
import logging
from pathlib import Path

import tablib

logger = logging.getLogger(__name__)


def render(payload, fmt):
    """A tablib Dataset/Databook or a plain dict rendered as csv or json text."""
    if isinstance(payload, tablib.Databook):
        if fmt == 'csv':
            return '\n'.join(f"# {sheet.title}\n{sheet.export('csv')}" for sheet in payload.sheets())
        return json.dumps({sheet.title: sheet.dict for sheet in payload.sheets()}, indent=2)
    if isinstance(payload, tablib.Dataset):
        return payload.export(fmt)
    if fmt == 'csv':
        raise ValueError("this result is only available as json")
    return json.dumps(payload, indent=2, sort_keys=True)


def emit(payload, fmt, path=None, stream=None):
    """Write the rendered payload to ``path`` or ``stream``."""
    text = render(payload, fmt)
    if path:
        Path(path).write_text(text, newline='')
        logger.info("wrote %s output to %s", fmt, path)
    else:
        stream.write(text)
        if not text.endswith('\n'):
            stream.write('\n')
    return text
