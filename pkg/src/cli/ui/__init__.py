# User interface utilities