import logging
import random
import sys
from collections.abc import Sequence

from rich.color import Color, blend_rgb
from rich.color_triplet import ColorTriplet
from rich.console import Console
from rich.logging import RichHandler
from rich.style import Style
from rich.text import Text

# Reports go to stdout; logs and the banner stay on stderr.
console = Console(stderr=True)
out = Console(soft_wrap=True)

logging.getLogger("asyncio").setLevel(logging.WARNING)

clean_handler = RichHandler(
    console=console,
    show_time=False,
    show_level=False,
    show_path=False,
    markup=True,
)

level_logging = logging.DEBUG if "-debug" in sys.argv or "--debug" in sys.argv else logging.INFO
logging.basicConfig(
    level=level_logging,
    format="%(message)s",
    handlers=[clean_handler],
)
log = logging.getLogger("rich")

ascii_lines = [
    "",
    " ┏━┓┏━┓┏┓ ╻ ╻┏━┓╺┳╸┏━┓",
    " ┣┳┛┃ ┃┣┻┓┃ ┃┗━┓ ┃ ┣━┫",
    " ╹┗╸┗━┛┗━┛┗━┛┗━┛ ╹ ╹ ╹",
    "",
]


# Gradient end points of the banner, picked two at a time.
BANNER_PALETTE = (
    ColorTriplet(214, 69, 65),
    ColorTriplet(240, 173, 78),
    ColorTriplet(92, 184, 92),
    ColorTriplet(91, 192, 222),
    ColorTriplet(66, 139, 202),
    ColorTriplet(155, 89, 182),
)


def banner_lines(start: ColorTriplet, end: ColorTriplet) -> list[Text]:
    """
    The banner, each line shaded from ``start`` on its first glyph to ``end`` on its last.

    Args:
        start (ColorTriplet): Colour of the leftmost glyph.
        end (ColorTriplet): Colour of the rightmost glyph.

    Returns:
        list[Text]: One styled line per banner row.
    """
    lines = []
    for line in ascii_lines:
        glyphs = [i for i, char in enumerate(line) if char.strip()]
        text = Text()
        if not glyphs:
            lines.append(text)
            continue
        first, span = glyphs[0], max(glyphs[-1] - glyphs[0], 1)
        for i, char in enumerate(line):
            if char.strip():
                shade = blend_rgb(start, end, (i - first) / span)
                text.append(char, style=Style(color=Color.from_triplet(shade)))
            else:
                text.append(char)
        lines.append(text)
    return lines


def print_banner(palette: Sequence[ColorTriplet] = BANNER_PALETTE):
    start, end = random.sample(list(palette), 2)
    for text in banner_lines(start, end):
        console.print(text, soft_wrap=True)


def set_debug(enabled: bool):
    """Switches the log level after arguments are parsed (``--debug`` is also honoured at import)."""
    log.setLevel(logging.DEBUG if enabled else logging.INFO)
    logging.getLogger().setLevel(logging.DEBUG if enabled else logging.INFO)
