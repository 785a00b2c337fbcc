import asyncio
import json
import select
import socket
import threading
import time

import pytest

from gazeintent.driver import script_for_seed
from gazeintent.predictor import train_predictors
from gazeintent.server import FrameParser, SessionServer, encode_frame
from gazeintent.session import ProtocolError, replay
from gazeintent.svm import SvmParams, model_hash
from gazeintent.synthetic import GazeProfileParams, generate_corpus


@pytest.fixture(scope="module")
def models():
    corpus = generate_corpus(GazeProfileParams(), n_episodes=36, seed=601)
    return train_predictors(corpus, SvmParams(c=1.0), seed=0)


class ServerThread:
    """Runs the asyncio TCP (and optionally WS) server on a side thread."""

    def __init__(self, server: SessionServer, ws: bool = False):
        self.server = server
        self.ws = ws
        self.loop = asyncio.new_event_loop()
        self.tcp_port = None
        self.ws_port = None
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._ready = threading.Event()

    def _run(self):
        asyncio.set_event_loop(self.loop)

        async def boot():
            tcp = await self.server.serve_tcp("127.0.0.1", 0)
            self.tcp_port = tcp.sockets[0].getsockname()[1]
            if self.ws:
                ws_server = await self.server.serve_ws("127.0.0.1", 0)
                self.ws_port = list(ws_server.sockets)[0].getsockname()[1]
            self._ready.set()

        self.loop.run_until_complete(boot())
        self.loop.run_forever()

    def __enter__(self):
        self._thread.start()
        assert self._ready.wait(10)
        return self

    def __exit__(self, *exc):
        def stopper():
            for task in asyncio.all_tasks(self.loop):
                task.cancel()
            self.loop.stop()

        self.loop.call_soon_threadsafe(stopper)
        self._thread.join(timeout=10)
        self.loop.close()


def run_script_tcp(port, msgs, settle=0.8):
    """Send frames over TCP, draining responses as they arrive."""
    sock = socket.create_connection(("127.0.0.1", port))
    sock.setblocking(False)
    parser = FrameParser()
    responses = []

    def drain(timeout=0.0):
        while True:
            r, _, _ = select.select([sock], [], [], timeout)
            if not r:
                return False
            data = sock.recv(65536)
            if not data:
                return True
            responses.extend(parser.feed(data))
            timeout = 0.0

    for msg in msgs:
        data = encode_frame(msg)
        while data:
            _, w, _ = select.select([sock], [sock], [], 5)[:3]
            drain()
            try:
                sent = sock.send(data)
                data = data[sent:]
            except BlockingIOError:
                pass
    sock.shutdown(socket.SHUT_WR)
    deadline = time.time() + 10
    while time.time() < deadline:
        if drain(timeout=settle):
            break
    sock.close()
    return responses


def test_frame_parser_roundtrip_and_partials():
    parser = FrameParser()
    msgs = [{"tag": "gaze", "t": i * 0.1, "x": 1.5, "y": -2.0, "valid": True}
            for i in range(5)]
    blob = b"".join(encode_frame(m) for m in msgs)
    out = []
    for i in range(0, len(blob), 7):  # feed in awkward chunks
        out.extend(parser.feed(blob[i : i + 7]))
    assert out == msgs
    with pytest.raises(ProtocolError):
        FrameParser().feed(encode_frame({"a": 1})[: 4] + b"not json")


def test_tcp_session_handshake_and_game(tmp_path, models):
    server = SessionServer(
        models, model_hash(models.pick, models.place), log_dir=tmp_path
    )
    with ServerThread(server) as st:
        msgs = script_for_seed(21, "follow", max_blocks=1)
        responses = run_script_tcp(st.tcp_port, msgs)
    tags = [r["tag"] for r in responses]
    assert tags[0] == "state"
    assert "probs" in tags
    assert "tip" in tags
    events = [r.get("event") for r in responses if r["tag"] == "outcome"]
    assert "picked" in events
    assert "placed" in events
    assert not [r for r in responses if r["tag"] == "error"]

    log_path = tmp_path / "21-follow.jsonl"
    assert log_path.exists()
    result = replay(log_path, models)
    assert result.identical
    assert result.summary["placed_total"] == 1


def test_tcp_rejects_protocol_garbage(models):
    server = SessionServer(models, model_hash(models.pick, models.place))
    with ServerThread(server) as st:
        responses = run_script_tcp(
            st.tcp_port,
            [{"tag": "gaze", "t": 0.0, "x": 0, "y": 0, "valid": True}],
        )
    assert responses[0]["tag"] == "error"
    assert responses[0]["code"] == "ProtocolError"


def test_tcp_resume_restores_board(models):
    server = SessionServer(models, model_hash(models.pick, models.place))
    with ServerThread(server) as st:
        first = run_script_tcp(
            st.tcp_port, script_for_seed(33, "follow", max_blocks=1)
        )
        session_id = first[0]["session"]
        resumed = run_script_tcp(
            st.tcp_port,
            [{"tag": "start", "t": 0.0, "seed": 33, "resume": session_id}],
        )
    assert resumed[0]["tag"] == "state"
    assert resumed[0]["session"] == session_id
    board_states = [r for r in first if r["tag"] == "state"]
    done_resumed = sum(c["completed"] for c in resumed[0]["board"]["cells"])
    assert done_resumed == sum(
        c["completed"] for c in board_states[-1]["board"]["cells"]
    )


def test_websocket_transport_smoke(models):
    from websockets.sync.client import connect

    server = SessionServer(models, model_hash(models.pick, models.place))
    with ServerThread(server, ws=True) as st:
        with connect(f"ws://127.0.0.1:{st.ws_port}") as ws:
            ws.send(json.dumps({"tag": "start", "t": 0.0, "seed": 5,
                                "mode": "off"}))
            state = json.loads(ws.recv(timeout=10))
            assert state["tag"] == "state"
            assert state["config"]["mode"] == "off"
            assert len(state["config"]["pattern_cells"]) == 24
            ws.send(json.dumps({"tag": "gaze", "t": 0.0133, "x": 40.0,
                                "y": 40.0, "valid": True}))
            got = json.loads(ws.recv(timeout=10))
            assert got["tag"] in ("probs", "tip")
