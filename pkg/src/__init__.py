# Posterior Fusion Toolkit