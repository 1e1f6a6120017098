"""Air-to-ground channel model.

Large-scale gain follows a power law with separate LOS / NLOS exponents, the
LOS probability is a sigmoid in the elevation angle, and small-scale fading is
Nakagami-m (its power is Gamma distributed). Every random draw goes through the
``numpy.random.Generator`` passed in by the caller.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from py_uavnoma.enums import ChannelMode, LinkType
from py_uavnoma.errors import DomainError
from py_uavnoma.models import ChannelParams, LinkSample

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Links shorter than this are evaluated at this distance.
MIN_DISTANCE = 1.0


def _scalar_or_array(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def los_probability(elevation_deg: ArrayLike, params: ChannelParams):
    """Probability of a line-of-sight link at the given elevation angle(s).

    Args:
        elevation_deg: Elevation angle in degrees, within [0, 90]
        params: Channel constants (``los_a``, ``los_b`` are used)

    Returns:
        float for scalar input, ndarray otherwise
    """
    theta = np.asarray(elevation_deg, dtype=float)
    if np.any(np.isnan(theta)) or np.any(theta < 0) or np.any(theta > 90):
        raise DomainError("elevation angle must lie in [0, 90] degrees")
    p = 1.0 / (1.0 + params.los_a * np.exp(-params.los_b * (theta - params.los_a)))
    return _scalar_or_array(p)


def _los_mask(link_type, shape) -> np.ndarray:
    if isinstance(link_type, (str, LinkType)):
        return np.full(shape, LinkType(link_type) == LinkType.LOS)
    return np.broadcast_to(np.asarray(link_type, dtype=bool), shape)


def path_gain(distance: ArrayLike, link_type, params: ChannelParams):
    """Large-scale power gain.

    Args:
        distance: 3D link distance(s) in meters, > 0
        link_type: a ``LinkType`` or a boolean array (True means LOS)
        params: Channel constants

    Returns:
        beta0 d^-alpha_los for LOS links, kappa beta0 d^-alpha_nlos otherwise
    """
    d = np.asarray(distance, dtype=float)
    if np.any(np.isnan(d)) or np.any(d <= 0):
        raise DomainError("distance must be > 0")
    los = _los_mask(link_type, d.shape)
    g_los = params.beta0 * d ** (-params.alpha_los)
    g_nlos = params.kappa_nlos * params.beta0 * d ** (-params.alpha_nlos)
    return _scalar_or_array(np.where(los, g_los, g_nlos))


def sample_fading(
    params: ChannelParams,
    rng: np.random.Generator,
    size: Optional[Union[int, Tuple[int, ...]]] = None,
):
    """Nakagami-m fading power draws, Gamma(m, omega / m)."""
    if params.m < 0.5:
        raise DomainError("Nakagami shape m must be >= 0.5")
    if params.omega <= 0:
        raise DomainError("omega must be > 0")
    if not params.fading:
        return 1.0 if size is None else np.ones(size)
    return rng.gamma(shape=params.m, scale=params.omega / params.m, size=size)


def _geometry(uav_pos, user_pos) -> Tuple[float, float, float]:
    uav = np.asarray(uav_pos, dtype=float)
    user = np.asarray(user_pos, dtype=float)
    user_z = user[2] if user.shape[0] > 2 else 0.0
    altitude = float(uav[2] - user_z)
    if altitude <= 0:
        raise DomainError("UAV altitude above the user must be > 0")
    horizontal = float(np.hypot(uav[0] - user[0], uav[1] - user[1]))
    distance = max(float(np.hypot(horizontal, altitude)), MIN_DISTANCE)
    return distance, horizontal, altitude


def link_sample(
    uav_pos, user_pos, params: ChannelParams, rng: np.random.Generator
) -> LinkSample:
    """Draw one link realization between a UAV and a ground user."""
    distance, horizontal, altitude = _geometry(uav_pos, user_pos)
    elevation = float(np.degrees(np.arctan2(altitude, horizontal)))
    if params.mode == ChannelMode.LOS_ONLY:
        link = LinkType.LOS
    else:
        is_los = rng.random() < los_probability(elevation, params)
        link = LinkType.LOS if is_los else LinkType.NLOS
    return LinkSample(
        distance=distance,
        elevation_deg=elevation,
        link_type=link,
        path_gain=path_gain(distance, link, params),
        fading_gain=float(sample_fading(params, rng)),
    )


def effective_gain(
    uav_pos, user_pos, params: ChannelParams, rng: np.random.Generator
) -> float:
    """Instantaneous power gain of one link (path gain times fading)."""
    return link_sample(uav_pos, user_pos, params, rng).power_gain


def mean_gain(uav_pos, user_pos, params: ChannelParams) -> float:
    """Gain averaged over fading and over the LOS/NLOS state."""
    distance, horizontal, altitude = _geometry(uav_pos, user_pos)
    elevation = float(np.degrees(np.arctan2(altitude, horizontal)))
    return float(_mean_from_geometry(distance, elevation, params))


def _mean_from_geometry(distance, elevation, params: ChannelParams):
    scale = params.omega if params.fading else 1.0
    g_los = path_gain(distance, LinkType.LOS, params)
    if params.mode == ChannelMode.LOS_ONLY:
        return scale * np.asarray(g_los)
    p = np.asarray(los_probability(elevation, params))
    g_nlos = path_gain(distance, LinkType.NLOS, params)
    return scale * (p * g_los + (1 - p) * g_nlos)


def sample_gains(
    horizontal: np.ndarray,
    altitude: ArrayLike,
    params: ChannelParams,
    rng: Optional[np.random.Generator] = None,
    mean: bool = False,
) -> np.ndarray:
    """Vectorized gains from horizontal distances and altitudes of any shape.

    Link types and fading are drawn independently per entry. With ``mean``
    the fading-averaged gain is returned and ``rng`` is not used.
    """
    horizontal = np.asarray(horizontal, dtype=float)
    altitude = np.broadcast_to(np.asarray(altitude, dtype=float), horizontal.shape)
    if np.any(altitude <= 0):
        raise DomainError("UAV altitude above the user must be > 0")
    distance = np.maximum(np.hypot(horizontal, altitude), MIN_DISTANCE)
    elevation = np.degrees(np.arctan2(altitude, horizontal))
    if mean:
        return np.asarray(_mean_from_geometry(distance, elevation, params))
    if rng is None:
        raise ValueError("rng is required unless mean=True")
    if params.mode == ChannelMode.LOS_ONLY:
        los = True
    else:
        los = rng.random(distance.shape) < los_probability(elevation, params)
    gain = np.asarray(path_gain(distance, los, params))
    return gain * sample_fading(params, rng, distance.shape)


def link_gain_matrix(
    uav_positions,
    user_positions,
    params: ChannelParams,
    rng: Optional[np.random.Generator] = None,
    batch: Optional[int] = None,
    mean: bool = False,
) -> np.ndarray:
    """Users x UAVs gain matrix, with a leading ``batch`` axis when given.

    Args:
        uav_positions: (V, 3) UAV positions
        user_positions: (U, 2) or (U, 3) user positions
        params: Channel constants
        rng: Generator for link-type and fading draws
        batch: Number of independent realizations of the same geometry
        mean: Return the fading-averaged matrix instead of a draw
    """
    uavs = np.asarray(uav_positions, dtype=float).reshape(-1, 3)
    users = np.asarray(user_positions, dtype=float)
    users = users.reshape(-1, users.shape[-1]) if users.size else users.reshape(0, 2)
    user_z = users[:, 2] if users.shape[1] > 2 else np.zeros(users.shape[0])
    horizontal = np.hypot(
        users[:, None, 0] - uavs[None, :, 0], users[:, None, 1] - uavs[None, :, 1]
    )
    altitude = uavs[None, :, 2] - user_z[:, None]
    if batch is not None and not mean:
        horizontal = np.broadcast_to(horizontal, (batch,) + horizontal.shape)
    return sample_gains(horizontal, altitude, params, rng=rng, mean=mean)
