"""
This module provides high level utility functions to generate a single
trajectory of a controlled dynamical system and to learn the system back from it.

Reference
---------
"""

from .activation import Activation
from .identify import GDConfig, MixingPlan, experimentLearningRate, identify
from .system import LinearSystem, NoiseSpec, NonlinearSystem, Policy, zeroPolicy
from .trajectory import simulate


def generate(A, B, T, activation=None, K=None, sigma=0.0, seed=0, form='premix'):
    """
    Function to simulate one trajectory of ``h_{t+1} = phi(A h_t + B u_t) + w_t``
    with inputs ``u_t = z_t - K h_t``. Returns a
    :class:`systraj.trajectory.Trajectory` instance.

    Arguments:

    ``A``

        The ``n x n`` state matrix. (Required)

    ``B``

        The ``n x p`` input matrix. (Required)

    ``T``

        The trajectory length. (Required)

    ``activation``

        A :class:`systraj.activation.Activation`, the identity gives a linear
        system.

        Default is `None` (identity).

    ``K``

        The ``p x n`` feedback gain.

        Default is `None` (no feedback).

    ``sigma``

        The standard deviation of the process noise.

        Default is `0.0`.

    ``seed``

        The seed of the excitation and noise streams.

        Default is `0`.

    ``form``

        `premix` applies the activation to ``A h + B u``, `postadd` adds
        ``B u`` after the activation.

        Default is `premix`.

    """
    if activation is None or activation.isIdentity and form == 'premix':
        system = LinearSystem(A, B)
    else:
        system = NonlinearSystem(A, B, activation, form)
    policy = zeroPolicy(system) if K is None else Policy(K)
    return simulate(system, policy, NoiseSpec(sigma, seed), T)


def learn(traj, learningRate=None, iterations=1000, L=1, stopOnPlateau=False):
    """
    Function to learn the parameter ``[A B]`` of the system that produced
    ``traj`` by gradient descent on the empirical loss. Returns a
    :class:`systraj.identify.GDReport` instance, its ``theta`` is the estimate.

    Arguments:

    ``traj``

        A :class:`systraj.trajectory.Trajectory` instance. (Required)

    ``learningRate``

        The step size.

        Default is `None` (``0.1 (T - L) / T`` on the normalized loss).

    ``iterations``

        The iteration cap.

        Default is `1000`.

    ``L``

        The churn period, only every ``L``-th sample enters the loss.

        Default is `1`.

    ``stopOnPlateau``

        Stop once the parameter error stops improving.

        Default is `False`.

    """
    if learningRate is None:
        learningRate = experimentLearningRate(traj.T, L)
    cfg = GDConfig(learningRate, iterations, thetaStar=traj.system.theta,
                   stopOnPlateau=stopOnPlateau)
    plan = MixingPlan(L, (traj.T - L) // L, {}, 'fixed')
    return identify(traj, cfg, plan)


__all__ = ['Activation', 'generate', 'learn']
