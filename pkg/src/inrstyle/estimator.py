"""scikit-learn style front door: fit one content/style pair, then render.

Thin sugar over trainer/renderer for notebook use; the underlying Session is
exposed as `session_` and can be saved with the session module.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator

from inrstyle.imaging import Image
from inrstyle.latents import AlphaSpec, UniformAlpha
from inrstyle.objective import LossConfig
from inrstyle.perceptual import FeatureExtractor, load_extractor
from inrstyle.renderer import RenderRequest, render
from inrstyle.trainer import AlphaSampling, TrainConfig, train


def _as_image(x) -> Image:
    if isinstance(x, Image):
        return x
    return Image(np.asarray(x, dtype=np.float32))


class ControllableStyleTransfer(BaseEstimator):
    """Estimator facade: `fit(content, style)` runs test-time training,
    `transform(alpha=..., size=...)` renders under any style-degree field.

    Parameters mirror TrainConfig; `vgg_weights` is a path to a weight file or
    an already-loaded FeatureExtractor.
    """

    def __init__(self, vgg_weights=None, iterations=5000, train_size=256,
                 learning_rate=1e-3, style_weight=1e5, kappa=2.0,
                 reweight_mode="exponential", seed=0, center_crop=False,
                 alpha_mode="uniform", snapshot_interval=0):
        self.vgg_weights = vgg_weights
        self.iterations = iterations
        self.train_size = train_size
        self.learning_rate = learning_rate
        self.style_weight = style_weight
        self.kappa = kappa
        self.reweight_mode = reweight_mode
        self.seed = seed
        self.center_crop = center_crop
        self.alpha_mode = alpha_mode
        self.snapshot_interval = snapshot_interval

    def _config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            train_size=self.train_size,
            center_crop=self.center_crop,
            alpha_sampling=AlphaSampling(mode=self.alpha_mode),
            loss=LossConfig(lambda_style=self.style_weight, kappa=self.kappa,
                            reweight_mode=self.reweight_mode),
            latent_seed=self.seed,
            param_seed=self.seed,
            alpha_seed=self.seed,
            snapshot_interval=self.snapshot_interval,
        )

    def _extractor(self) -> FeatureExtractor:
        if isinstance(self.vgg_weights, FeatureExtractor):
            return self.vgg_weights
        if self.vgg_weights is None:
            raise ValueError("vgg_weights is required: a weight-file path or FeatureExtractor")
        return load_extractor(self.vgg_weights)

    def fit(self, content, style, progress=None):
        self.session_ = train(_as_image(content), _as_image(style),
                              self._config(), self._extractor(), progress=progress)
        return self

    def transform(self, alpha: AlphaSpec | float = 0.5, size=None, chunk_rows=256) -> np.ndarray:
        """Render; `alpha` is a spec or a plain uniform value, `size` an
        (height, width) pair defaulting to the training dims."""
        if not hasattr(self, "session_"):
            raise RuntimeError("not fitted: call fit(content, style) first")
        if isinstance(alpha, numbers.Real):
            alpha = UniformAlpha(float(alpha))
        if size is None:
            h, w = self.session_.train_height, self.session_.train_width
        else:
            h, w = int(size[0]), int(size[1])
        req = RenderRequest(height=h, width=w, alpha=alpha, chunk_rows=chunk_rows)
        return render(self.session_, req).data

    def fit_transform(self, content, style, **kw) -> np.ndarray:
        return self.fit(content, style).transform(**kw)
