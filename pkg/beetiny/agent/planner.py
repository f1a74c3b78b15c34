"""
Planner
^^^^^^^

Sampling based model predictive control in latent space.

Exploration uses a single round of the cross-entropy method, i.e. ranked random shooting: sample
action sequences, roll them through the frozen dynamics, score them with the method's reward and
pick one of the best few at random. Goal reaching refits a Gaussian to the elite candidates
between rounds and returns the cheapest candidate found.

All random draws happen before candidates are evaluated. Evaluation is pure, so splitting it over
worker threads (``PlanConfig.workers``) gives the same result as serial evaluation.
"""
from concurrent.futures import ThreadPoolExecutor
import logging
import typing

import numpy as np

from ..models import ACTION_DIM
from ..models.config import PlanConfig
from ..models.episode import Episode
from ..models.planning import CandidatePlan, GoalPlan, Refit
from ..nn.rng import Rng
from ..sim.tabletop import TabletopEnv, clip_action
from ..utils.errors import ConfigError
from .baselines import random_policy

#: Maps (start latent, actions ``(M, H, A)``, predicted latents ``(M, H, L)``) to ``M`` scores
RewardFn = typing.Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

#: Lower bound of refitted standard deviations
MIN_STD = 1e-3


def sample_actions(rng: Rng, count: int, horizon: int, std: typing.Any,
                   mean: typing.Any = 0.0, action_dim: int = ACTION_DIM) -> np.ndarray:
    noise = rng.normal(size=(count, horizon, action_dim))
    return np.clip(mean + std * noise, -1.0, 1.0)


def action_size(world_model) -> int:
    """
    Action size of a world model; models without an ``action_dim`` take the gripper's two
    """
    return int(getattr(world_model, "action_dim", ACTION_DIM))


def _chunks(count: int, workers: int) -> typing.List[slice]:
    bounds = np.linspace(0, count, min(workers, count) + 1).astype(int)
    return [slice(start, stop) for start, stop in zip(bounds, bounds[1:])]


def evaluate_candidates(z0: np.ndarray, world_model, reward_fn: typing.Optional[RewardFn],
                        actions: np.ndarray, workers: int = 1) \
        -> typing.Tuple[np.ndarray, typing.Optional[np.ndarray]]:
    """
    Roll out candidates and score them

    :return: (predicted latents ``(M, H, L)``, scores ``(M,)`` or ``None`` without ``reward_fn``)
    """
    def _evaluate(part: slice):
        latents = world_model.rollout(z0, actions[part])
        scores = None
        if reward_fn is not None:
            scores = np.asarray(reward_fn(z0, actions[part], latents), dtype=np.float64)
        return latents, scores

    if workers <= 1:
        return _evaluate(slice(0, len(actions)))

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(_evaluate, _chunks(len(actions), workers)))
    latents = np.concatenate([result[0] for result in results])
    if reward_fn is None:
        return latents, None
    return latents, np.concatenate([result[1] for result in results])


def plan_explore(z0: np.ndarray, world_model, reward_fn: RewardFn, cfg: PlanConfig, rng: Rng,
                 candidates: typing.Optional[np.ndarray] = None) -> CandidatePlan:
    """
    Choose an exploratory action sequence

    :param z0: Current latent state
    :param world_model: Provides ``rollout(z0, actions)``
    :param reward_fn: Trajectory reward, see :py:data:`RewardFn`
    :param cfg: Planner settings
    :param rng: Random stream
    :param candidates: Fixed candidate set ``(M, H, A)`` used instead of sampling
    :return: Selected candidate; its ``actions`` include the epsilon-random replacements
    :raises ConfigError: if the settings are invalid or no candidate exists
    """
    cfg.validate()
    if candidates is None:
        actions = sample_actions(rng, cfg.num_samples, cfg.horizon, cfg.action_sample_std,
                                 action_dim=action_size(world_model))
    else:
        actions = np.clip(np.asarray(candidates, dtype=np.float64), -1.0, 1.0)
        if actions.ndim != 3 or not len(actions):
            raise ConfigError("Candidate set must be a non-empty (M, H, A) array")

    latents, scores = evaluate_candidates(z0, world_model, reward_fn, actions, cfg.workers)
    order = np.argsort(-scores, kind="stable")
    choice = int(order[rng.integers(0, min(cfg.top_k_choice, len(actions)))])

    selected = actions[choice].copy()
    replace = rng.random(len(selected)) < cfg.epsilon_random
    random_actions = rng.uniform(-1.0, 1.0, size=selected.shape)
    selected[replace] = random_actions[replace]

    logger = logging.getLogger("beetiny.explore")
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("Plan: top score %.5f, chosen rank score %.5f, %d random actions",
                     scores[order[0]], scores[choice], int(replace.sum()))
    return CandidatePlan(selected, latents[choice], float(scores[choice]))


def goal_costs(world_model, latents: np.ndarray, goal: np.ndarray) -> np.ndarray:
    """
    Mean squared pixel error between the decoded final predicted latent and the goal image
    """
    decoded = np.asarray(world_model.decode(latents[:, -1]), dtype=np.float64)
    decoded = decoded.reshape((len(latents), -1))
    return np.mean(np.square(decoded - goal.reshape(1, -1)), axis=1)


# pylint: disable=too-many-arguments,too-many-locals
def plan_goal(z0: np.ndarray, goal_obs: np.ndarray, world_model, cfg: PlanConfig, rng: Rng,
              candidates: typing.Optional[np.ndarray] = None) -> GoalPlan:
    """
    Cross-entropy method towards a goal image

    Each later round samples from the Gaussian refitted to the previous round's elites and
    keeps those elites (with their costs) alongside the new samples, so the best cost of a round
    never exceeds the best cost of the round before.

    :param z0: Current latent state
    :param goal_obs: Goal image; ``uint8`` frames are scaled to ``[0, 1]``
    :param world_model: Provides ``rollout`` and ``decode``
    :param cfg: Planner settings (``cem_iterations`` rounds, ``elite_count`` elites)
    :param rng: Random stream
    :param candidates: Fixed candidates for the first round
    """
    cfg.validate()
    goal = np.asarray(goal_obs)
    goal = goal.astype(np.float64) / 255.0 if goal.dtype == np.uint8 else goal.astype(np.float64)

    if candidates is not None:
        candidates = np.clip(np.asarray(candidates, dtype=np.float64), -1.0, 1.0)
        horizon, action_dim = candidates.shape[1:]
    else:
        horizon, action_dim = cfg.horizon, action_size(world_model)
    mean = np.zeros((horizon, action_dim))
    std = np.full((horizon, action_dim), cfg.action_sample_std)

    best: typing.Optional[CandidatePlan] = None
    elites = elite_latents = elite_costs = None
    refits, best_costs = [], []
    for iteration in range(cfg.cem_iterations):
        if iteration == 0 and candidates is not None:
            actions = candidates
        else:
            actions = sample_actions(rng, cfg.num_samples, horizon, std, mean, action_dim)
        latents, _ = evaluate_candidates(z0, world_model, None, actions, cfg.workers)
        costs = goal_costs(world_model, latents, goal)
        if elite_latents is not None:
            actions = np.concatenate([actions, elites])
            latents = np.concatenate([latents, elite_latents])
            costs = np.concatenate([costs, elite_costs])
        order = np.argsort(costs, kind="stable")
        best_costs.append(float(costs[order[0]]))
        if best is None or costs[order[0]] < -best.score:
            best = CandidatePlan(actions[order[0]].copy(), latents[order[0]],
                                 -float(costs[order[0]]))
        if iteration < cfg.cem_iterations - 1:
            keep = order[:min(cfg.elite_count, len(actions))]
            elites, elite_latents, elite_costs = actions[keep], latents[keep], costs[keep]
            mean = elites.mean(axis=0)
            std = np.maximum(elites.std(axis=0), MIN_STD)
            refits.append(Refit(mean, std))

    logger = logging.getLogger("beetiny.downstream")
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("Goal plan costs per round: %s", best_costs)
    return GoalPlan(best, tuple(refits), tuple(best_costs))


def _run(env: TabletopEnv, choose: typing.Callable[[np.ndarray, int], np.ndarray]) \
        -> typing.Tuple[list, list, list]:
    observation = env.reset()
    frames, actions, states = [observation.frame], [], [observation.truth]
    step = 0
    while step < env.horizon:
        for action in choose(observation.frame, step):
            action = clip_action(action)
            observation = env.step(action)
            frames.append(observation.frame)
            actions.append(action)
            states.append(observation.truth)
            step += 1
    return frames, actions, states


def act_episode(env: TabletopEnv, world_model, reward_fn: RewardFn, cfg: PlanConfig,
                rng: Rng) -> Episode:
    """
    Run one episode that replans every ``cfg.horizon`` steps

    Only rendered frames reach the world model and the planner.

    :raises ConfigError: if the episode horizon is not a multiple of the planning horizon
    """
    if env.horizon % cfg.horizon:
        raise ConfigError(f"Episode horizon {env.horizon} is not a multiple of the planning "
                          f"horizon {cfg.horizon}")
    scores = []

    def _choose(frame: np.ndarray, step: int) -> np.ndarray:
        z0 = world_model.encode_mean(frame)
        plan = plan_explore(z0, world_model, reward_fn, cfg, rng.child("plan", step))
        scores.append(plan.score)
        return plan.actions

    frames, actions, states = _run(env, _choose)
    return Episode(np.stack(frames), np.stack(actions), tuple(states), tuple(scores))


def random_episode(env: TabletopEnv, rng: Rng, action_dim: int = ACTION_DIM) -> Episode:
    """
    Run one episode of uniformly random actions
    """
    def _choose(frame: np.ndarray, step: int) -> np.ndarray:
        return random_policy(rng, action_dim)[None]

    frames, actions, states = _run(env, _choose)
    return Episode(np.stack(frames), np.stack(actions), tuple(states))
