"""Tests for the command-line entry point"""

import json
import logging

import pytest

from momentgap import __version__
from momentgap.cli import build_parser, config_from_args, load_config, main
from momentgap.runner import EXIT_INPUT, EXIT_OK


class TestLoadConfig:
    """Tests for load_config"""

    def test_defaults_without_file(self):
        config = load_config()

        assert config.subcommand == "reproduce"
        assert config.samples == 10000

    def test_file_values_applied(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"samples": 500, "seed": 9, "format": "text"}))

        config = load_config(str(path))

        assert config.samples == 500
        assert config.seed == 9
        assert config.format == "text"

    def test_unknown_key_warns(self, tmp_path, caplog):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"samples": 500, "colour": "blue"}))

        with caplog.at_level(logging.WARNING):
            config = load_config(str(path))

        assert config.samples == 500
        assert "Ignoring unknown config key: colour" in caplog.text

    def test_missing_file_keeps_defaults(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            config = load_config(str(tmp_path / "absent.json"))

        assert config.samples == 10000
        assert "Config file not found" in caplog.text

    def test_invalid_json_keeps_defaults(self, tmp_path, caplog):
        path = tmp_path / "config.json"
        path.write_text("{samples: ")

        with caplog.at_level(logging.WARNING):
            config = load_config(str(path))

        assert config.seed == 42
        assert "Invalid config file" in caplog.text

    def test_non_object_keeps_defaults(self, tmp_path, caplog):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")

        with caplog.at_level(logging.WARNING):
            load_config(str(path))

        assert "must contain a JSON object" in caplog.text


class TestParser:
    """Tests for build_parser and config_from_args"""

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"samples": 500, "seed": 9}))
        args = build_parser().parse_args(["verify", "--config", str(path), "--seed", "3"])

        config = config_from_args(args)

        assert config.subcommand == "verify"
        assert config.samples == 500
        assert config.seed == 3

    def test_list_arguments(self):
        args = build_parser().parse_args(["expsum", "--set", "list", "--elements", "0,1,5"])
        assert config_from_args(args).elements == [0, 1, 5]

    def test_bad_list_exits(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["rademacher", "--coeffs", "1,x"])

    def test_normalize_toggle(self):
        args = build_parser().parse_args(["rademacher", "--coeffs", "1", "--no-normalize"])
        assert config_from_args(args).normalize is False

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--version"])
        assert __version__ in capsys.readouterr().out


class TestMain:
    """Tests for main"""

    def test_rademacher_json_stdout(self, capsys):
        code = main(["rademacher", "--bias", "0.5", "--coeffs", "1,1"])
        report = json.loads(capsys.readouterr().out)

        assert code == EXIT_OK
        assert report["n"] == 2
        assert report["l1"] == pytest.approx(2 ** 0.5 / 2.0)

    def test_output_file(self, tmp_path, capsys):
        path = tmp_path / "report.csv"

        code = main(["expsum", "--set", "list", "--elements", "0,1", "--format", "csv", "-o", str(path)])

        assert code == EXIT_OK
        assert capsys.readouterr().out == ""
        assert path.read_text().splitlines()[0].startswith("m,l1,")

    def test_input_error_exit_code(self, capsys):
        code = main(["rademacher", "--bias", "1.5", "--coeffs", "1"])
        report = json.loads(capsys.readouterr().out)

        assert code == EXIT_INPUT
        assert report["error"]["type"] == "ParameterError"

    def test_string_number_in_config_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"p": "4"}))

        code = main(["constant", "--config", str(path)])
        report = json.loads(capsys.readouterr().out)

        assert code == EXIT_INPUT
        assert report["error"]["type"] == "ParameterError"
        assert "invalid configuration value" in report["error"]["message"]

    def test_unwritable_output(self, tmp_path):
        code = main(["rademacher", "--coeffs", "1", "-o", str(tmp_path / "missing" / "out.json")])
        assert code == EXIT_INPUT

    def test_identical_runs_identical_bytes(self, capsys):
        main(["rademacher", "--bias", "0.3", "--coeffs", "1,2,2", "--format", "text"])
        first = capsys.readouterr().out
        main(["rademacher", "--bias", "0.3", "--coeffs", "1,2,2", "--format", "text"])
        assert capsys.readouterr().out == first
