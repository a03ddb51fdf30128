"""Stochastic unit commitment with a learned recourse surrogate.

Subpackage map: grid (system data + PTDF), milp (model + bundled solver),
sucform (UC/recourse/extensive-form builders), scen (scenario sampling),
datagen (training data), neural (embedding + ReLU regression nets), encode
(network-to-MILP translation), surrogate (neural UC assembly/solve), cli
(command-line pipeline).
"""

__version__ = "0.1.0"
