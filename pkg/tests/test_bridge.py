import json
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from alefx import ale_first, ale_second
from alefx.bridge import (
    BridgeConfig,
    BridgeError,
    BridgePredictor,
    decode_response,
    encode_request,
    external_predict,
    make_http_server,
)
from alefx.models import parse_expression

from .conftest import make_data

ECHO = Path(__file__).parent / "helpers" / "echo_model.py"


def sub_cfg(mode="echo", **kw):
    return BridgeConfig("subprocess", (sys.executable, str(ECHO), mode), **kw)


class TestWireFormat:
    def test_request_record(self):
        raw = encode_request(3, ["a", "b"], np.array([[1.0, 2.5]]))
        assert raw.endswith(b"\n") and raw.count(b"\n") == 1
        assert json.loads(raw) == {"id": 3, "columns": ["a", "b"], "rows": [[1.0, 2.5]]}

    def test_round_trip_precision(self):
        x = np.array([[0.1 + 0.2, np.pi, 1e-300, -2.5e17]])
        assert np.array_equal(np.array(json.loads(encode_request(0, list("abcd"), x))["rows"]), x)

    def test_length_mismatch(self):
        with pytest.raises(BridgeError, match="2 predictions for 3 rows"):
            decode_response(b'{"id": 0, "predictions": [1, 2]}', 0, 3)

    def test_id_mismatch(self):
        with pytest.raises(BridgeError, match="id 5"):
            decode_response(b'{"id": 5, "predictions": [1]}', 4, 1)

    def test_nonfinite_names_row(self):
        with pytest.raises(BridgeError, match="at row 11"):
            decode_response(b'{"id": 1, "predictions": [1, NaN]}', 1, 2, first_row=10)

    def test_malformed(self):
        with pytest.raises(BridgeError, match="malformed"):
            decode_response(b"not json", 0, 1)

    @pytest.mark.parametrize("kw", [dict(batch_size=0), dict(timeout=0), dict(max_in_flight=0),
                                    dict(transport="ftp")])
    def test_config_validation(self, kw):
        args = dict(transport="http", target="http://x")
        args.update(kw)
        with pytest.raises(ValueError):
            BridgeConfig(**args)

    def test_config_from_dict(self):
        cfg = BridgeConfig.from_dict({"transport": "subprocess", "target": ["a", "b"], "batch_size": 7})
        assert cfg.target == ("a", "b") and cfg.batch_size == 7


class TestSubprocess:
    def test_echo_first_column(self):
        X = np.random.default_rng(0).normal(size=(10, 3))
        np.testing.assert_array_equal(external_predict(sub_cfg(), X), X[:, 0])

    def test_chunking(self):
        X = np.arange(2000.0).reshape(1000, 2)
        with BridgePredictor(sub_cfg(batch_size=256)) as model:
            out = model.predict(X)
            assert model.requests_sent == [0, 1, 2, 3]
            assert model.ledger.total_rows_predicted == 1000
        np.testing.assert_array_equal(out, X[:, 0])

    def test_short_response(self):
        with pytest.raises(BridgeError, match="2 predictions for 3 rows"):
            external_predict(sub_cfg("short"), np.zeros((3, 2)))

    def test_nonfinite(self):
        with pytest.raises(BridgeError, match="row 1"):
            external_predict(sub_cfg("nan"), np.zeros((3, 2)))

    def test_crash_diagnostics(self):
        with pytest.raises(BridgeError, match="(?s)exit status 3.*model exploded") as exc:
            external_predict(sub_cfg("crash"), np.zeros((3, 2)))
        assert "request 0" in str(exc.value)

    def test_timeout_names_id(self):
        t0 = time.monotonic()
        with pytest.raises(BridgeError, match="request 0: timed out"):
            external_predict(sub_cfg("sleep", timeout=0.5), np.zeros((3, 2)))
        assert time.monotonic() - t0 < 10

    def test_bad_id(self):
        with pytest.raises(BridgeError, match="carries id 1"):
            external_predict(sub_cfg("badid"), np.zeros((3, 2)))

    def test_ale_equivalence(self):
        data = make_data(300, 2, seed=4, corr=0.7)
        local = ale_first(parse_expression("x1 + x2^2"), data, 0, K=20)
        with BridgePredictor(sub_cfg("sumsq", batch_size=128)) as model:
            remote = ale_first(model, data, 0, K=20)
            surf = ale_second(model, data, 0, 1, K=6)
        np.testing.assert_allclose(remote.centered, local.centered, rtol=0, atol=1e-12)
        assert np.max(np.abs(surf.centered)) <= 1e-10

    def test_serve_stdio_round_trip(self):
        cfg = BridgeConfig("subprocess", (sys.executable, "-m", "alefx", "serve", "--model", "expr:x1*x2 + 1"))
        X = np.random.default_rng(2).normal(size=(50, 2))
        np.testing.assert_allclose(external_predict(cfg, X), X[:, 0] * X[:, 1] + 1, rtol=1e-15)


class SlowOutOfOrder:
    """HTTP model that answers later ids sooner and tracks concurrency."""

    def __init__(self):
        self.lock = threading.Lock()
        self.active = 0
        self.peak = 0
        self.order = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                rec = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with outer.lock:
                    outer.active += 1
                    outer.peak = max(outer.peak, outer.active)
                time.sleep(max(0.0, 0.2 - 0.04 * rec["id"]))
                with outer.lock:
                    outer.active -= 1
                    outer.order.append(rec["id"])
                body = json.dumps({"id": rec["id"], "predictions": [r[0] * 2 for r in rec["rows"]]}).encode()
                self.send_response(200)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *a):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=self.server.serve_forever, daemon=True).start()
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/"

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


class TestHttp:
    @pytest.fixture
    def slow(self):
        srv = SlowOutOfOrder()
        yield srv
        srv.stop()

    def test_out_of_order_reassembly(self, slow):
        X = np.arange(40.0).reshape(20, 2)
        cfg = BridgeConfig("http", slow.url, batch_size=4, max_in_flight=5)
        out = external_predict(cfg, X)
        np.testing.assert_array_equal(out, 2 * X[:, 0])
        assert slow.order != sorted(slow.order)
        assert slow.peak <= 5

    def test_in_flight_cap(self, slow):
        X = np.arange(40.0).reshape(20, 2)
        external_predict(BridgeConfig("http", slow.url, batch_size=2, max_in_flight=2), X)
        assert slow.peak <= 2

    def test_builtin_server_equivalence(self):
        model = parse_expression("x1 + x2^2")
        server = make_http_server(model)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}/"
            data = make_data(200, 2, seed=9, corr=0.5)
            cfg = BridgeConfig("http", url, batch_size=50, max_in_flight=3)
            with BridgePredictor(cfg) as remote:
                a = ale_first(remote, data, 1, K=15)
            b = ale_first(parse_expression("x1 + x2^2"), data, 1, K=15)
            np.testing.assert_allclose(a.centered, b.centered, rtol=0, atol=1e-12)
        finally:
            server.shutdown()
            server.server_close()

    def test_server_error_status(self):
        server = make_http_server(parse_expression("log(x1)"))
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}/"
            with pytest.raises(BridgeError, match="HTTP 500"):
                external_predict(BridgeConfig("http", url), np.array([[-1.0, 0.0]]))
        finally:
            server.shutdown()
            server.server_close()

    def test_timeout(self, slow):
        with pytest.raises(BridgeError, match="timed out"):
            external_predict(BridgeConfig("http", slow.url, timeout=0.05), np.zeros((1, 2)))

    def test_unreachable(self):
        with pytest.raises(BridgeError, match="request 0"):
            external_predict(BridgeConfig("http", "http://127.0.0.1:9/", timeout=2), np.zeros((1, 2)))
