from contextlib import redirect_stderr, redirect_stdout
import io
import json
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import mock
import warnings

import numpy as np

from .. import cli
from ..agent import planner
from ..agent.methods import build_method
from ..agent.world_model import WorldModel
from ..bee import Bee
from ..extensions import ablation as ablation_module
from ..extensions.ablation import apply_setting, build_report, parse_sweep, write_report
from ..extensions.datasets import (HEADER, decode_dataset, encode_dataset, load_dataset,
                                   read_header, save_dataset)
from ..models import ACTION_DIM
from ..models.config import ExperimentConfig
from ..models.episode import Dataset, Episode
from ..nn.params import load_checkpoint
from ..sim.tabletop import TabletopEnv
from ..sim.tasks import DownstreamTask, get_task
from ..utils.conf import dump_config
from ..utils.errors import ConfigError, DatasetError, NonFiniteError, UsageError
from ..utils.journal import JOURNAL_NAME, Entry, RunJournal
from ..utils.metrics import MetricsLog
from .base import BeeTest, LinearFixtureModel, SMALL_CONFIG

RUN_CONFIG = SMALL_CONFIG._replace(layout_overrides={"horizon": 20, "image_size": 8})

ARTIFACTS = ("dataset.bin", "metrics.csv", "world_model.ckpt", "method.ckpt", "config.json",
             JOURNAL_NAME)


def small_dataset(episodes=2, seed=0, config_hash="abc"):
    bee = Bee(RUN_CONFIG._replace(seed=seed))
    env = bee.make_env()
    return Dataset(tuple(planner.random_episode(env, bee.rng("episode", index)).without_truth()
                         for index in range(episodes)), config_hash)


def write_fake_run(run_dir, setting, flags, journal=True):
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    log = MetricsLog(["target"])
    for index, flag in enumerate(flags):
        row = dict.fromkeys(log.columns)
        row.update(episode=index, name=setting, target_moved=bool(flag))
        log.append(row)
    log.write_csv(run_dir / "metrics.csv")
    if journal:
        RunJournal.append(run_dir / JOURNAL_NAME, Entry(setting, "method: bee"))
    return run_dir


def zero_planner(z0, goal, world_model, cfg, rng):
    return np.zeros((cfg.horizon, ACTION_DIM))


class ExplorationTest(BeeTest):
    config = RUN_CONFIG

    def test_run_writes_artifacts(self):
        bee = Bee(self.config)
        with TemporaryDirectory() as tmp:
            result = bee.exploration.run(out_dir=tmp)
            for name in ARTIFACTS:
                with self.subTest(artifact=name):
                    self.assertTrue(Path(tmp, name).is_file())
            self.assertFalse(Path(tmp, "diagnostic.ckpt").exists())

            header = read_header(Path(tmp, "dataset.bin"))
            loaded = load_dataset(Path(tmp, "dataset.bin"))
            metrics = MetricsLog.read_csv(Path(tmp, "metrics.csv"))
            journal = RunJournal.parse(Path(tmp, JOURNAL_NAME))
            with Path(tmp, "config.json").open(encoding="utf-8") as handle:
                config_data = json.load(handle)

        self.assertEqual((bee.config_hash, 3, 20, 8, 8, 2), tuple(header))
        self.assertEqual(3, len(result.dataset.episodes))
        self.assertEqual(60, result.dataset.transitions)
        for episode, stored in zip(result.dataset.episodes, loaded.episodes):
            self.assertEqual((), episode.states)
            self.assertAllEqual(episode.frames, stored.frames)
            self.assertAllEqual(episode.actions, stored.actions)

        self.assertEqual(3, len(metrics))
        self.assertEqual(["0", "1", "2"], metrics.column("episode"))
        self.assertEqual({bee.config_hash}, set(metrics.column("config_hash")))
        self.assertIsNone(result.metrics.rows[0]["top_score"])
        self.assertIsNotNone(result.metrics.rows[2]["top_score"])
        self.assertIsNotNone(result.metrics.rows[0]["mean_reward"])

        entry = journal.find("test-seed0")
        self.assertEqual("60", entry.fields["transitions"])
        self.assertEqual(bee.config_hash, entry.fields["config_hash"])
        self.assertEqual(self.config, ExperimentConfig.from_dict(config_data))

    def test_deterministic(self):
        contents = []
        for _ in range(2):
            with TemporaryDirectory() as tmp:
                Bee(self.config).exploration.run(out_dir=tmp)
                contents.append({name: Path(tmp, name).read_bytes()
                                 for name in ("dataset.bin", "metrics.csv", "world_model.ckpt",
                                              "method.ckpt")})
        for name, data in contents[0].items():
            with self.subTest(artifact=name):
                self.assertEqual(data, contents[1][name])

    def test_seed_changes_data(self):
        first = Bee(self.config).exploration.run()
        second = Bee(self.config._replace(seed=1)).exploration.run()
        self.assertNotEqual(encode_dataset(first.dataset._replace(config_hash="")),
                            encode_dataset(second.dataset._replace(config_hash="")))

    def test_random_method_never_plans(self):
        config = self.config._replace(method="random")
        with mock.patch.object(planner, "plan_explore") as plan_explore, \
                TemporaryDirectory() as tmp:
            result = Bee(config).exploration.run(out_dir=tmp)
            self.assertFalse(Path(tmp, "method.ckpt").exists())
        plan_explore.assert_not_called()
        self.assertEqual([None] * 3, result.metrics.column("mean_reward"))
        self.assertEqual([None] * 3, result.metrics.column("top_score"))

    def test_methods_run(self):
        for method in ("disagreement", "smm"):
            with self.subTest(method=method):
                result = Bee(self.config._replace(method=method, episodes=2)).exploration.run()
                self.assertEqual(2, len(result.metrics))
                self.assertIsNotNone(result.metrics.rows[1]["top_score"])

    def test_non_finite_writes_diagnostics(self):
        error = NonFiniteError("Non-finite gradient", {"tensors": {"vae.encoder.0.weight": 3}})
        with mock.patch.object(WorldModel, "train_step", side_effect=error), \
                TemporaryDirectory() as tmp:
            with self.assertLogs("beetiny.explore", "ERROR"):
                with self.assertRaises(NonFiniteError):
                    Bee(self.config).exploration.run(out_dir=tmp)
            bee = Bee(self.config)
            arrays = dict(bee.make_world_model().named_arrays())
            arrays.update(build_method(self.config, bee.rng("method")).named_arrays())
            load_checkpoint(Path(tmp, "diagnostic.ckpt"), arrays)
            self.assertFalse(Path(tmp, "metrics.csv").exists())


class DatasetsTest(BeeTest):
    def test_save_load_save(self):
        dataset = small_dataset()
        with TemporaryDirectory() as tmp:
            first = save_dataset(dataset, Path(tmp, "a", "dataset.bin"))
            second = save_dataset(load_dataset(first), Path(tmp, "b.bin"))
            self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertEqual(("abc", 2, 20, 8, 8, 2), tuple(read_header(second)))

    def test_layout(self):
        dataset = small_dataset(episodes=1)
        data = encode_dataset(dataset)
        self.assertEqual(HEADER.size + 21 * 64 + 20 * 2 * 8, len(data))
        self.assertEqual(b"BEEDATA\0", data[:8])
        frames_end = HEADER.size + 21 * 64
        self.assertEqual(dataset.episodes[0].frames.tobytes(), data[HEADER.size:frames_end])

    def test_empty(self):
        decoded = decode_dataset(encode_dataset(Dataset((), "empty")))
        self.assertEqual(0, len(decoded.episodes))
        self.assertEqual("empty", decoded.config_hash)

    def test_replace_keeps_episodes(self):
        dataset = small_dataset()
        replaced = dataset._replace(config_hash="other")
        self.assertIs(dataset.episodes, replaced.episodes)
        self.assertEqual("other", replaced.config_hash)
        self.assertEqual(dataset.transitions, replaced.transitions)
        self.assertEqual(encode_dataset(dataset)[HEADER.size:],
                         encode_dataset(replaced)[HEADER.size:])

    def test_corrupt(self):
        data = encode_dataset(small_dataset())
        for name, corrupt in (("truncated", data[:-1]), ("header", data[:HEADER.size - 1]),
                              ("magic", b"X" + data[1:]), ("trailing", data + b"\0"),
                              ("version", data[:8] + b"\x02" + data[9:])):
            with self.subTest(name=name):
                with self.assertRaises(DatasetError) as context:
                    decode_dataset(corrupt)
                self.assertIsNotNone(context.exception.offset)
        with self.assertRaises(DatasetError) as context:
            decode_dataset(data[:-1])
        self.assertEqual(len(data) - 1, context.exception.offset)

    def test_mixed_shapes(self):
        dataset = small_dataset()
        short = Episode(dataset.episodes[0].frames[:5], dataset.episodes[0].actions[:4])
        with self.assertRaises(ConfigError):
            encode_dataset(Dataset((dataset.episodes[0], short)))

    def test_extension(self):
        bee = Bee(RUN_CONFIG)
        with TemporaryDirectory() as tmp:
            path = bee.datasets.save(small_dataset().episodes, Path(tmp, "dataset.bin"))
            self.assertEqual(bee.config_hash, bee.datasets.header(path).config_hash)
            self.assertEqual(2, len(bee.datasets.load(path).episodes))


class DownstreamTest(BeeTest):
    config = RUN_CONFIG

    def test_trivially_true_task(self):
        task = get_task("block_push")._replace(name="anything", succeeded=lambda *_: True)
        result = Bee(self.config).downstream.run_eval(
            small_dataset(), task, trials=3, planner=zero_planner, model=LinearFixtureModel(
                np.zeros((4, 2))))
        self.assertEqual(("anything", (True, True, True)), tuple(result))
        self.assertEqual(1.0, result.success_rate)
        self.assertEqual(3, result.trials)

    def test_idle_planner_fails(self):
        for task in ("block_push", "door_open", "drawer_open"):
            with self.subTest(task=task):
                result = Bee(self.config).downstream.run_eval(
                    small_dataset(), task, planner=zero_planner,
                    model=LinearFixtureModel(np.zeros((4, 2))))
                self.assertEqual(0.0, result.success_rate)
                self.assertEqual(2, result.trials)

    def test_rounds_fill_horizon(self):
        stub = mock.Mock(side_effect=zero_planner)
        Bee(self.config).downstream.run_eval(small_dataset(), "block_push", trials=2,
                                             planner=stub,
                                             model=LinearFixtureModel(np.zeros((4, 2))))
        # 20 step episodes take two 10 step plans
        self.assertEqual(4, stub.call_count)
        z0, goal, _, cfg, _ = stub.call_args[0]
        self.assertEqual((4,), z0.shape)
        self.assertEqual((8, 8), goal.shape)
        self.assertEqual(self.config.goal_plan, cfg)

    def test_goal_plan_result(self):
        calls = []

        def plan(z0, goal, world_model, cfg, rng):
            calls.append(z0)
            return planner.plan_goal(z0, goal, world_model, cfg, rng)

        bee = Bee(self.config)
        model = bee.make_world_model()
        result = bee.downstream.run_eval(small_dataset(), "block_push", trials=1, planner=plan,
                                         model=model)
        self.assertEqual(2, len(calls))
        self.assertIn(result.success_rate, (0.0, 1.0))

    def test_train_model(self):
        model = Bee(self.config).downstream.train_model(small_dataset(), updates=2)
        self.assertEqual(8, model.image_size)
        with self.assertRaises(UsageError):
            Bee(self.config).downstream.train_model(Dataset(()))

    def test_custom_task(self):
        task = DownstreamTask("never", "door", "door", get_task("door_open").goal,
                              lambda *_: False)
        result = Bee(self.config).downstream.run_eval(small_dataset(), task, trials=1,
                                                      planner=zero_planner,
                                                      model=LinearFixtureModel(np.eye(4, 2)))
        self.assertEqual((False,), result.successes)


    def test_flat_plan_is_split_into_actions(self):
        def flat_planner(z0, goal, world_model, cfg, rng):
            return np.zeros(cfg.horizon * ACTION_DIM)

        with mock.patch.object(TabletopEnv, "step", autospec=True,
                               side_effect=TabletopEnv.step) as step:
            Bee(self.config).downstream.run_eval(small_dataset(), "block_push", trials=1,
                                                 planner=flat_planner,
                                                 model=LinearFixtureModel(np.zeros((4, 2))))
        self.assertEqual(20, step.call_count)
        for call in step.call_args_list:
            self.assertEqual((ACTION_DIM,), call[0][1].shape)


class AblationTest(BeeTest):
    def test_parse_sweep(self):
        for spec, key, values in (("latent_dim=8,16", "model.latent_dim", ("8", "16")),
                                  ("reward_mode=max, single", "reward_mode", ("max", "single")),
                                  ("plan.horizon=5", "plan.horizon", ("5",)),
                                  ("model.beta=0,0.001", "model.beta", ("0", "0.001"))):
            with self.subTest(spec=spec):
                sweep = parse_sweep(spec)
                self.assertEqual((key, values), tuple(sweep))
                self.assertEqual(key.rsplit(".", 1)[-1], sweep.label)

    def test_parse_sweep_invalid(self):
        for spec in ("latent_dim", "=1", "latent_dim=", "bogus=1", "model.bogus=1", "x.seed=1"):
            with self.subTest(spec=spec):
                with self.assertRaises(ConfigError):
                    parse_sweep(spec)

    def test_apply_setting(self):
        config = apply_setting(SMALL_CONFIG, parse_sweep("latent_dim=8"), "8", 3)
        self.assertEqual(8, config.model.latent_dim)
        self.assertEqual(3, config.seed)
        self.assertEqual("latent_dim=8", config.name)
        self.assertEqual(SMALL_CONFIG.plan, config.plan)
        with self.assertRaises(ConfigError):
            apply_setting(SMALL_CONFIG, parse_sweep("reward_mode=min"), "min", 0)

    def test_cells(self):
        with TemporaryDirectory() as tmp:
            cells = Bee(SMALL_CONFIG).ablation.cells(
                "reward_mode=max,mean_plus_variance,single", (0, 1), tmp)
        self.assertEqual(6, len(cells))
        self.assertEqual(6, len({cell.out_dir for cell in cells}))
        self.assertEqual(["max", "max", "mean_plus_variance", "mean_plus_variance", "single",
                          "single"], [cell.config.reward_mode for cell in cells])
        self.assertEqual([0, 1] * 3, [cell.config.seed for cell in cells])
        self.assertEqual(Path(tmp, "reward_mode=single", "seed1"), cells[-1].out_dir)

    def test_build_report(self):
        with TemporaryDirectory() as tmp:
            dirs = [write_fake_run(Path(tmp, "a0"), "a", [1, 1, 0, 0]),
                    write_fake_run(Path(tmp, "a1"), "a", [1, 0, 1, 0]),
                    write_fake_run(Path(tmp, "b0"), "b", [0, 0, 0, 1])]
            rows = build_report(dirs, window=2)
            path = write_report(rows, Path(tmp, "out", "report.csv"))
            lines = path.read_text(encoding="utf-8").splitlines()

        self.assertEqual(4, len(rows))
        first, second = rows[:2]
        self.assertEqual(("a", 0, 2), (first.setting, first.window, first.seeds))
        self.assertAlmostEqual(0.75, first.mean)
        self.assertAlmostEqual(0.25, second.mean)
        self.assertAlmostEqual(0.25, first.stderr)
        self.assertAlmostEqual(0.0625, first.across_window_variance)
        self.assertEqual(("b", 1, 0.5, 0.0, 1), tuple(rows[3])[:5])
        self.assertEqual("setting,window,mean,stderr,seeds,across_window_variance", lines[0])
        self.assertEqual(5, len(lines))

    def test_report_warnings(self):
        with TemporaryDirectory() as tmp:
            complete = write_fake_run(Path(tmp, "complete"), "a", [1, 0])
            unjournaled = write_fake_run(Path(tmp, "unjournaled"), "a", [1, 1], journal=False)
            Path(tmp, "empty").mkdir()
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rows = build_report([complete, unjournaled, Path(tmp, "empty")], window=2)
        messages = [str(item.message) for item in caught]
        self.assertEqual(2, len(messages))
        self.assertIn("No journal entry", messages[0])
        self.assertIn("No metrics", messages[1])
        self.assertEqual([("a", 0, 0.75)], [row[:3] for row in rows])

    def test_run_with_stubbed_cells(self):
        def fake_cell(config_data, out_dir):
            flags = [1, 1] if config_data["reward_mode"] == "max" else [0, 1]
            write_fake_run(out_dir, config_data["name"], flags)
            return out_dir

        with mock.patch.object(ablation_module, "_run_cell", side_effect=fake_cell) as run_cell, \
                TemporaryDirectory() as tmp:
            result = Bee(SMALL_CONFIG).ablation.run("reward_mode=max,single", seeds=(0, 1),
                                                    out_dir=tmp)
            self.assertTrue(Path(tmp, "report.csv").is_file())
            rebuilt = Bee(SMALL_CONFIG).ablation.report([cell.out_dir for cell in result.cells],
                                                        window=2)
        self.assertEqual(4, run_cell.call_count)
        self.assertEqual(list(result.report), rebuilt)
        self.assertEqual({"reward_mode=max": 1.0, "reward_mode=single": 0.5},
                         {row.setting: row.mean for row in result.report})

    def test_small_sweep(self):
        config = RUN_CONFIG._replace(episodes=2)
        with TemporaryDirectory() as tmp:
            result = Bee(config).ablation.run("reward_mode=max,single", seeds=(0,), out_dir=tmp)
            for cell in result.cells:
                with self.subTest(cell=cell.setting):
                    self.assertTrue(cell.out_dir.joinpath("metrics.csv").is_file())
                    self.assertEqual(cell.setting, RunJournal.parse(
                        cell.out_dir.joinpath(JOURNAL_NAME)).entries[0].run_id.rsplit("-", 1)[0])
        self.assertEqual(["reward_mode=max", "reward_mode=single"],
                         [row.setting for row in result.report])


class CliTest(BeeTest):
    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_help(self):
        with redirect_stdout(io.StringIO()) as out:
            with self.assertRaises(SystemExit) as context:
                cli.main(["--help"])
        self.assertEqual(0, context.exception.code)
        self.assertIn("explore", out.getvalue())

    def test_explore_and_eval(self):
        with TemporaryDirectory() as tmp:
            config_path = dump_config(RUN_CONFIG._replace(episodes=2), Path(tmp, "bee.json"))
            code, out, _ = self.run_cli("explore", "--config", str(config_path), "--seed", "4",
                                        "--out", str(Path(tmp, "run")))
            self.assertEqual(0, code)
            self.assertIn("Collected 2 episodes", out)
            self.assertIn("test-seed4", Path(tmp, "run", JOURNAL_NAME).read_text("utf-8"))

            code, out, _ = self.run_cli("eval", "--config", str(config_path), "--dataset",
                                        str(Path(tmp, "run", "dataset.bin")), "--task",
                                        "block_push", "--trials", "1")
            self.assertEqual(0, code)
            self.assertIn("block_push: success rate", out)

    def test_report(self):
        with TemporaryDirectory() as tmp:
            run_dir = write_fake_run(Path(tmp, "run"), "a", [1, 0, 1, 1])
            code, out, _ = self.run_cli("report", "--runs", str(run_dir), "--window", "2",
                                        "--out", str(Path(tmp, "report.csv")))
            self.assertEqual(0, code)
            self.assertIn("Wrote 2 rows", out)

    def test_errors(self):
        with TemporaryDirectory() as tmp:
            bad_config = Path(tmp, "bad.yaml")
            bad_config.write_text("bogus: 1\n", encoding="utf-8")
            dataset = save_dataset(small_dataset(), Path(tmp, "dataset.bin"))
            for argv in (("explore", "--config", str(bad_config), "--out", tmp),
                         ("eval", "--dataset", str(Path(tmp, "missing.bin")), "--task",
                          "block_push"),
                         ("eval", "--dataset", str(dataset), "--task", "fly")):
                with self.subTest(argv=argv):
                    code, _, err = self.run_cli(*argv)
                    self.assertEqual(1, code)
                    self.assertIn("Error:", err)
