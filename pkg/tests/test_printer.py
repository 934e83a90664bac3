import pytest

from almc.syntax import pretty
from almc.syntax.parser import parse_file

from conftest import ALM_FILES, parse_path, read


@pytest.mark.parametrize("path", ALM_FILES, ids=lambda p: p.name)
def test_pretty_round_trip_is_exact(path):
    text = read(path)
    node = parse_path(path)
    assert pretty(node) == text


@pytest.mark.parametrize("path", ALM_FILES, ids=lambda p: p.name)
def test_reparse_is_structurally_identical(path):
    node = parse_path(path)
    again = parse_file(pretty(node), str(path))
    assert again == node  # spans are excluded from node equality


def test_printer_is_idempotent():
    for path in ALM_FILES:
        once = pretty(parse_path(path))
        assert pretty(parse_file(once)) == once
