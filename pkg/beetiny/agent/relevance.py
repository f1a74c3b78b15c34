"""
Relevance ensemble
^^^^^^^^^^^^^^^^^^

Binary classifiers over latent states that tell frames resembling the relevant examples (label 1)
apart from frames the agent visited (label 0). Their aggregated score is the exploration reward.

Every member is a spectrally normalized sigmoid network with its own optimizer and its own random
stream, so members see different minibatches even under an identical schedule.
"""
import logging
import typing

import numpy as np

from ..models.config import ModelConfig, RewardMode
from ..nn.functional import binary_cross_entropy, mixup_batch, random_crop
from ..nn.layers import Activation, DenseNet
from ..nn.optim import Adam
from ..nn.params import ParamTensor
from ..nn.rng import Rng
from ..utils.buffer import DEFAULT_WINDOW, ReplayBuffer
from ..utils.errors import UsageError, ensure_finite


def aggregate(scores: np.ndarray, mode: RewardMode) -> np.ndarray:
    """
    Combine member scores along the last axis

    * ``max``: highest member score
    * ``mean_plus_variance``: mean plus population variance of the member scores
    * ``single``: score of member 0
    """
    scores = np.asarray(scores, dtype=np.float64)
    if mode is RewardMode.MAX:
        return scores.max(axis=-1)
    if mode is RewardMode.MEAN_PLUS_VARIANCE:
        return scores.mean(axis=-1) + scores.var(axis=-1)
    return scores[..., 0]


class RelevanceEnsemble:
    """
    :param config: Model settings (member count, hidden widths, learning rate, mixup, power
                   iterations, minibatch size)
    :param rng: Stream from which every member derives its initialization and training streams
    :param mode: Aggregation used by :py:meth:`r_exp` when none is given
    """
    def __init__(self, config: ModelConfig, rng: Rng, mode: RewardMode = RewardMode.MAX):
        self.config = config
        self.latent_dim = config.latent_dim
        self.mode = mode
        self.members: typing.List[DenseNet] = []
        self.optimizers: typing.List[Adam] = []
        self.streams: typing.List[Rng] = []
        for index in range(config.ensemble_size):
            member = DenseNet.build([config.latent_dim, *config.discriminator_hidden, 1],
                                    rng.child("member", index, "init"),
                                    output_activation=Activation.SIGMOID, spectral_norm=True,
                                    name=f"relevance.{index}")
            member.refresh_spectral_norm(config.power_iterations)
            self.members.append(member)
            self.optimizers.append(Adam(member.parameters(), lr=config.lr))
            self.streams.append(rng.child("member", index, "train"))

    def __len__(self) -> int:
        return len(self.members)

    def score(self, z: np.ndarray) -> np.ndarray:
        """
        Member scores for latents of any leading shape

        :return: Array of shape ``z.shape[:-1] + (L,)`` with entries in ``(0, 1)``
        """
        z = np.asarray(z, dtype=np.float64)
        flat = z.reshape((-1, self.latent_dim))
        scores = np.stack([member.predict(flat)[:, 0] for member in self.members], axis=-1)
        return scores.reshape(z.shape[:-1] + (len(self.members),))

    def r_exp(self, z: np.ndarray, mode: typing.Optional[RewardMode] = None) -> np.ndarray:
        return aggregate(self.score(z), mode or self.mode)

    def trajectory_reward(self, latents: np.ndarray,
                          mode: typing.Optional[RewardMode] = None) -> np.ndarray:
        """
        Sum of :py:meth:`r_exp` over the steps of ``(H, L)`` or ``(B, H, L)`` latents
        """
        latents = np.asarray(latents, dtype=np.float64)
        if latents.ndim < 2 or latents.shape[-2] == 0:
            raise UsageError("trajectory_reward needs a non-empty latent sequence")
        return self.r_exp(latents, mode).sum(axis=-1)

    def __call__(self, z0: np.ndarray, actions: np.ndarray, latents: np.ndarray) -> np.ndarray:
        return self.trajectory_reward(latents)

    def update_member(self, index: int, latents: np.ndarray, labels: np.ndarray,
                      rng: typing.Optional[Rng] = None, mixup: bool = True) -> float:
        """
        One Adam step of member ``index`` on labelled latents

        :return: Binary cross-entropy of the (possibly mixed) batch before the step
        """
        member = self.members[index]
        latents = np.asarray(latents, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.float64)
        if mixup:
            latents, labels = mixup_batch(latents, labels, self.config.mixup_alpha,
                                          rng if rng is not None else self.streams[index])
        member.refresh_spectral_norm(self.config.power_iterations)
        self.optimizers[index].zero_grad()
        prob = member.forward(latents)[:, 0]
        loss, grad = binary_cross_entropy(prob, labels)
        ensure_finite(loss, f"relevance member {index} loss")
        member.backward(grad[:, None])
        self.optimizers[index].step()
        return loss

    def update_on_latents(self, positives: np.ndarray, negatives: np.ndarray,
                          mixup: bool = True) -> typing.List[float]:
        """
        One balanced update per member on pre-encoded latents
        """
        half = self.config.discriminator_batch
        losses = []
        for index, stream in enumerate(self.streams):
            pos = positives[stream.integers(0, len(positives), size=half)]
            neg = negatives[stream.integers(0, len(negatives), size=half)]
            labels = np.concatenate([np.ones(half), np.zeros(half)])
            losses.append(self.update_member(index, np.concatenate([pos, neg]), labels,
                                             rng=stream, mixup=mixup))
        return losses

    # pylint: disable=too-many-arguments
    def train_members(self, buffer: ReplayBuffer, relevant: np.ndarray, world_model,
                      crop_pad: int = 2, window: int = DEFAULT_WINDOW) -> typing.List[float]:
        """
        One update per member on its own balanced minibatch

        Positives come from the relevant example frames, negatives from the replay buffer. Both
        are crop-augmented and encoded with the posterior mean of the current encoder; the
        encoder itself is not trained here.

        :param buffer: Visited frames
        :param relevant: Relevant example frames, shape ``(K, H, W)``
        :param world_model: Provides ``encode_mean``
        :return: Loss per member
        """
        if not len(relevant):
            raise UsageError("At least one relevant example is required")
        half = self.config.discriminator_batch
        losses = []
        for index, stream in enumerate(self.streams):
            positives = relevant[stream.integers(0, len(relevant), size=half)]
            negatives = buffer.sample_frames(half, stream, window)
            images = np.concatenate([positives, negatives])
            images = random_crop(images, crop_pad, stream)
            latents = world_model.encode_mean(images)
            labels = np.concatenate([np.ones(half), np.zeros(half)])
            losses.append(self.update_member(index, latents, labels, rng=stream))

        logger = logging.getLogger("beetiny.train")
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("Relevance losses: %s", ", ".join(f"{loss:.4f}" for loss in losses))
        return losses

    def parameters(self) -> typing.List[ParamTensor]:
        return [param for member in self.members for param in member.parameters()]

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        arrays = {}
        for member in self.members:
            arrays.update({param.name: param.values for param in member.parameters()})
            arrays.update(member.buffers())
        return arrays
