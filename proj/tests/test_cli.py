"""Exit codes and output of the evidex command line on the bundled fixtures."""

import json
import shutil
import socket
import subprocess
import sys
import tempfile
import time
import unittest
import urllib.request
from pathlib import Path

EVIDEX = None
ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "data/fixtures"
CONFIG = FIX / "config.json"
CAL = FIX / "calibration"
QUERY_URL = "https://dailyviral.example/2016/05/27/gatorade-water-ads"


def run(*args, env=None, timeout=60):
    return subprocess.run([EVIDEX, *map(str, args)], capture_output=True, text=True, env=env, timeout=timeout)


def distance(a, b, method="wmd"):
    r = run("distance", a, b, "--method", method, "--config", CONFIG)
    assert r.returncode == 0, r.stderr
    return float(r.stdout)


class Usage(unittest.TestCase):
    def test_unknown_flag_is_2(self):
        self.assertEqual(run("verify", "--bogus").returncode, 2)
        self.assertEqual(run("frobnicate").returncode, 2)
        self.assertEqual(run().returncode, 2)

    def test_verify_needs_an_input(self):
        self.assertEqual(run("verify", "--config", CONFIG).returncode, 2)
        self.assertEqual(run("verify", "--url", QUERY_URL, "--file", FIX / "gatorade.html").returncode, 2)

    def test_bad_method_is_2(self):
        self.assertEqual(run("distance", CAL / "zika_0.txt", CAL / "zika_1.txt", "--method", "l2").returncode, 2)

    def test_help_is_0(self):
        self.assertEqual(run("--help").returncode, 0)


class Distance(unittest.TestCase):
    def test_identical_files(self):
        r = run("distance", CAL / "zika_0.txt", CAL / "zika_0.txt", "--config", CONFIG)
        self.assertEqual(r.returncode, 0)
        self.assertEqual(r.stdout.strip(), "0.000000")

    def test_symmetric_under_swap(self):
        a, b = CAL / "brexit_0.txt", CAL / "juno_1.txt"
        self.assertEqual(run("distance", a, b, "--config", CONFIG).stdout,
                         run("distance", b, a, "--config", CONFIG).stdout)

    def test_sinkhorn_not_below_exact(self):
        for a, b in [("zika_0", "zika_1"), ("brexit_0", "volkswagen_1"), ("gatorade_query", "gatorade_cnn")]:
            pa, pb = CAL / f"{a}.txt", CAL / f"{b}.txt"
            # Printed with 6 decimals, so compare up to rounding.
            self.assertGreaterEqual(distance(pa, pb, "sinkhorn"), distance(pa, pb) - 1e-6)

    def test_wrd_runs(self):
        self.assertGreaterEqual(distance(CAL / "zika_0.txt", CAL / "juno_0.txt", "wrd"), 0.0)

    def test_config_from_environment(self):
        env = {"EVIDEX_CONFIG": str(CONFIG), "PATH": "/usr/bin:/bin"}
        r = run("distance", CAL / "zika_0.txt", CAL / "zika_1.txt", env=env)
        self.assertEqual(r.returncode, 0, r.stderr)
        r = run("distance", CAL / "zika_0.txt", CAL / "zika_1.txt", env={"PATH": "/usr/bin:/bin"})
        self.assertEqual(r.returncode, 1)

    def test_missing_file_is_1(self):
        self.assertEqual(run("distance", CAL / "nope.txt", CAL / "zika_0.txt", "--config", CONFIG).returncode, 1)


class Calibrate(unittest.TestCase):
    def test_fixture_pairs(self):
        r = run("calibrate", "--pairs", FIX / "calibration_pairs.jsonl", "--config", CONFIG)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertAlmostEqual(float(r.stdout), json.loads(CONFIG.read_text())["threshold"], places=6)

    def test_missing_pairs_file_is_1(self):
        self.assertEqual(run("calibrate", "--pairs", FIX / "none.jsonl", "--config", CONFIG).returncode, 1)

    def test_write_back(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            cfg = json.loads(CONFIG.read_text())
            for key in ("embeddings_path", "stopwords_path", "fixture_corpus_path", "overrides_path"):
                if key in cfg:
                    cfg[key] = str((FIX / cfg[key]).resolve())
            cfg["threshold"] = 9.0
            (tmp / "config.json").write_text(json.dumps(cfg))
            shutil.copytree(CAL, tmp / "calibration")
            shutil.copy(FIX / "calibration_pairs.jsonl", tmp)
            r = run("calibrate", "--pairs", tmp / "calibration_pairs.jsonl", "--config", tmp / "config.json", "--write")
            self.assertEqual(r.returncode, 0, r.stderr)
            written = json.loads((tmp / "config.json").read_text())
            self.assertAlmostEqual(written["threshold"], float(r.stdout), places=6)
            self.assertEqual(list(written), list(cfg))


class Verify(unittest.TestCase):
    def test_table_output(self):
        r = run("verify", "--url", QUERY_URL, "--config", CONFIG)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("Verdict:   SupportFound", r.stdout)
        self.assertIn("https://cnn.example/2016/05/26/", r.stdout.split("\n 1 ")[1].splitlines()[1])

    def test_file_input(self):
        r = run("verify", "--file", FIX / "gatorade.html", "--sources", "cnn,bbc", "--config", CONFIG, "--json")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(json.loads(r.stdout)["verdict"], "SupportFound")

    def test_potentially_fake(self):
        r = run("verify", "--url", QUERY_URL, "--sources", "ap,bbc", "--config", CONFIG)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("PotentiallyFake (the article might be potentially fake)", r.stdout)

    def test_unknown_source_is_1(self):
        r = run("verify", "--url", QUERY_URL, "--sources", "fox", "--config", CONFIG)
        self.assertEqual(r.returncode, 1)
        self.assertIn("valid sources", r.stderr)

    def test_bad_config_is_1(self):
        with tempfile.NamedTemporaryFile("w", suffix=".json") as f:
            f.write("{not json")
            f.flush()
            self.assertEqual(run("verify", "--url", QUERY_URL, "--config", f.name).returncode, 1)


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Serve(unittest.TestCase):
    def test_answers_health(self):
        port = free_port()
        proc = subprocess.Popen([EVIDEX, "serve", "--config", CONFIG, "--host", "127.0.0.1", "--port", str(port)],
                                stderr=subprocess.DEVNULL)
        try:
            body = None
            for _ in range(300):
                try:
                    with urllib.request.urlopen(f"http://127.0.0.1:{port}/api/health", timeout=5) as res:
                        body = json.loads(res.read())
                    break
                except OSError:
                    time.sleep(0.1)
            self.assertIsNotNone(body)
            self.assertIn(body["status"], ("ok",))
        finally:
            proc.terminate()
            proc.wait(timeout=5)

    def test_bad_config_is_1(self):
        with tempfile.NamedTemporaryFile("w", suffix=".json") as f:
            json.dump({"threshold": 1.0, "embeddings_path": "/nonexistent/vectors.txt",
                       "stopwords_path": "/nonexistent/stop.txt", "sources": []}, f)
            f.flush()
            r = run("serve", "--config", f.name, "--port", free_port(), timeout=10)
            self.assertEqual(r.returncode, 1)
            self.assertIn("error:", r.stderr)

    def test_port_conflict_is_1(self):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            s.listen()
            port = s.getsockname()[1]
            r = run("serve", "--config", CONFIG, "--host", "127.0.0.1", "--port", port, timeout=10)
            self.assertEqual(r.returncode, 1)
            self.assertIn("cannot listen", r.stderr)


if __name__ == "__main__":
    EVIDEX = sys.argv.pop(1)
    unittest.main()
