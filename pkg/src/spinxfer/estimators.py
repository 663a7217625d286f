"""scikit-learn style wrapper around the eigenstate diagnostics.

Samples are eigenstates and features are site amplitudes, so an
``(n_states, N)`` array of eigenvectors (``EigenSystem.vectors.T``) maps to one
row of localization features per state and the transformer can sit in a
``Pipeline`` next to scalers or clustering of states.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .spectral import (
    AMPLITUDE_FLOOR,
    boundary_support,
    ipr,
    localization_length,
    number_variance,
)

FEATURES = ("xi", "mu", "number_variance", "ipr", "boundary_support")


class EigenstateLocalization(TransformerMixin, BaseEstimator):
    """Localization features of eigenvectors given as rows.

    Parameters
    ----------
    a : float
        Lattice period used for ``xi`` and ``mu``.
    floor : float
        Relative amplitude below which sites are left out of the exponential fit.
    """

    def __init__(self, a: float = 1.0, floor: float = AMPLITUDE_FLOOR):
        self.a = a
        self.floor = floor

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=3)
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, ensure_min_features=3)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} sites, but EigenstateLocalization was fitted with "
                f"{self.n_features_in_}"
            )
        V = X.T
        xi, mu = localization_length(V, self.a, self.floor)
        return np.column_stack(
            [xi, mu, number_variance(V), ipr(V), boundary_support(V)]
        )

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURES, dtype=object)
