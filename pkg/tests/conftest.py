import torch

# Keep CPU runs reproducible-per-machine and avoid oversubscription in the
# training-heavy acceptance tests.
torch.set_num_threads(min(4, torch.get_num_threads()))
