"""Admin CLI: subcommands, exit codes, environment fallbacks."""

import re
from pathlib import Path

import pytest

from foxrepo.cli import main
from foxrepo.fixtures import FIXTURE_PIDS
from foxrepo.index.query import execute_query
from foxrepo.storage import Repository

FOXML = """<foxml:digitalObject xmlns:foxml="info:fedora/fedora-system:def/foxml#" PID="test:1">
  <foxml:objectProperties>
    <foxml:property NAME="http://www.w3.org/1999/02/22-rdf-syntax-ns#type" VALUE="FedoraObject"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#state" VALUE="A"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#label" VALUE="CLI object"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#contentModel" VALUE="TEST"/>
    <foxml:property NAME="info:fedora/fedora-system:def/model#createdDate" VALUE="2005-01-01T00:00:00Z"/>
  </foxml:objectProperties>
</foxml:digitalObject>
"""


@pytest.fixture
def root(tmp_path):
    return str(tmp_path / "data")


@pytest.fixture
def foxml_file(tmp_path):
    path = tmp_path / "object.xml"
    path.write_text(FOXML, encoding="utf-8")
    return str(path)


class TestObjectCommands:
    def test_ingest_prints_pid(self, root, foxml_file, capsys):
        assert main(["--root", root, "ingest", foxml_file]) == 0
        assert capsys.readouterr().out == "test:1\n"

    def test_export_writes_exact_foxml_bytes(self, root, foxml_file, capsysbinary):
        main(["--root", root, "ingest", foxml_file])
        capsysbinary.readouterr()
        assert main(["--root", root, "export", "test:1"]) == 0
        out = capsysbinary.readouterr().out
        assert out == Repository(Path(root)).export("test:1")
        assert b'PID="test:1"' in out

    def test_duplicate_ingest_fails_with_code(self, root, foxml_file, capsys):
        main(["--root", root, "ingest", foxml_file])
        assert main(["--root", root, "ingest", foxml_file]) == 1
        captured = capsys.readouterr()
        assert captured.err.startswith("DuplicatePid:")

    def test_purge(self, root, foxml_file, capsys):
        main(["--root", root, "ingest", foxml_file])
        assert main(["--root", root, "purge", "test:1"]) == 0
        assert "purged test:1" in capsys.readouterr().out
        assert main(["--root", root, "export", "test:1"]) == 1
        assert capsys.readouterr().err.startswith("NotFound:")

    def test_missing_file_is_io_error(self, root, capsys):
        assert main(["--root", root, "ingest", "/nonexistent/object.xml"]) == 1
        assert capsys.readouterr().err.startswith("IoError:")


class TestQueryCommand:
    @pytest.fixture
    def loaded(self, root, capsysbinary):
        main(["--root", root, "load-fixtures"])
        capsysbinary.readouterr()
        return root

    def test_spo_query_bytes_match_engine(self, loaded, capsysbinary):
        query = "<info:fedora/demo:11> <rel:isMemberOf> *"
        assert main(["--root", loaded, "query", "--lang", "spo", query]) == 0
        out = capsysbinary.readouterr().out
        snapshot = Repository(Path(loaded)).index.snapshot()
        _ctype, expected = execute_query(snapshot, "spo", query, None, 10_000)
        assert out == expected
        assert b"<info:fedora/demo:10>" in out

    def test_itql_query_default_tsv(self, loaded, capsysbinary):
        query = "select $m from <#ri> where $m <rel:isMemberOf> <info:fedora/demo:10>"
        assert main(["--root", loaded, "query", query]) == 0
        out = capsysbinary.readouterr().out
        assert out.startswith(b"m\n")
        assert b"info:fedora/demo:11" in out
        assert b"info:fedora/demo:12" in out

    def test_query_from_file(self, loaded, tmp_path, capsysbinary):
        query_file = tmp_path / "q.spo"
        query_file.write_text("* <rel:isMemberOf> *", encoding="utf-8")
        assert main(["--root", loaded, "query", "--lang", "spo", f"@{query_file}"]) == 0
        from_file = capsysbinary.readouterr().out
        assert main(["--root", loaded, "query", "--lang", "spo", "* <rel:isMemberOf> *"]) == 0
        assert from_file == capsysbinary.readouterr().out
        assert b"<info:fedora/demo:11>" in from_file

    def test_limit_truncates(self, loaded, capsysbinary):
        assert main(["--root", loaded, "query", "--lang", "spo", "--limit", "1", "* * *"]) == 0
        assert b"# truncated" in capsysbinary.readouterr().out

    def test_format_flag(self, loaded, capsysbinary):
        assert main(
            ["--root", loaded, "query", "--lang", "spo", "--format", "xml", "* <rel:isMemberOf> *"]
        ) == 0
        assert capsysbinary.readouterr().out.startswith(b"<results")

    def test_syntax_error_exit_code(self, loaded, capsysbinary):
        assert main(["--root", loaded, "query", "--lang", "spo", "not a query at all"]) == 1
        assert capsysbinary.readouterr().err.startswith(b"QuerySyntax:")

    def test_unknown_lang_is_usage_error(self, loaded):
        with pytest.raises(SystemExit) as excinfo:
            main(["--root", loaded, "query", "--lang", "sparql", "* * *"])
        assert excinfo.value.code == 2


class TestMaintenanceCommands:
    def test_load_fixtures_then_rerun_reports_presence(self, root, capsys):
        assert main(["--root", root, "load-fixtures"]) == 0
        first = capsys.readouterr().out.splitlines()
        assert first == [f"ingested {pid}" for pid in FIXTURE_PIDS]
        assert main(["--root", root, "load-fixtures"]) == 0
        second = capsys.readouterr().out.splitlines()
        assert second == [f"{pid} already present" for pid in FIXTURE_PIDS]

    def test_rebuild_index(self, root, capsys):
        main(["--root", root, "load-fixtures"])
        capsys.readouterr()
        assert main(["--root", root, "rebuild-index"]) == 0
        out = capsys.readouterr().out
        assert re.fullmatch(r"rebuilt: 7 objects, \d+ triples\n", out)

    def test_rebuild_index_reports_corrupt_files(self, root, capsys):
        main(["--root", root, "load-fixtures"])
        capsys.readouterr()
        (Path(root) / "objects" / "junk.xml").write_bytes(b"<broken")
        assert main(["--root", root, "rebuild-index"]) == 1
        captured = capsys.readouterr()
        assert "rebuilt: 7 objects" in captured.out
        assert captured.err.startswith("failed: junk.xml")


class TestUsage:
    def test_no_command(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_root_env_fallback(self, root, foxml_file, capsys, monkeypatch):
        monkeypatch.setenv("FOXREPO_ROOT", root)
        assert main(["ingest", foxml_file]) == 0
        assert capsys.readouterr().out == "test:1\n"
        assert main(["export", "test:1"]) == 0

