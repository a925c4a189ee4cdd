"""
Estimation services.

Pure numerical layers, bottom-up: core_math, qr, dataset, vcm_estimator,
bandwidth, model_average, then the simulation, evaluation and data_io harness.
"""
