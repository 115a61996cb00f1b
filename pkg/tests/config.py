def get_test_config():
    config = {
        'omega_rtol': 1e-6,
        'ball_rtol': 1e-10,
        'identity_atol': 1e-6,
        'limit_rtol': 2e-2,
        'p_grid': [16.0 * 2 ** k for k in range(11)],
        'delta_grid': [1e-2, 0.1],
        'mc_samples': 200_000,
        'seed': 1,
        'r_values': [1.5, 3.0, 5.0],
    }
    return config
