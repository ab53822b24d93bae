# Path: /src/aean/persistence.py
# Saving and restoring trained models through the engine's checkpoint format.
from src.aean.model import AeanModel
from src.nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint


def save_model(model: AeanModel, path):
    meta = {"lam": model.lam, "block_size": model.block_size, "bands": model.bands, "trained": model.trained}
    save_checkpoint(path, model.dim, model.networks(), meta)


def load_model(path) -> AeanModel:
    dim, networks, meta = load_checkpoint(path)
    if set(networks) != {"autoencoder", "discriminator"}:
        raise CheckpointError(path, f"expected an autoencoder and a discriminator, found {sorted(networks)}")
    model = AeanModel(dim=dim, autoencoder=networks["autoencoder"], discriminator=networks["discriminator"],
                      lam=meta["lam"], block_size=meta["block_size"], bands=meta["bands"],
                      trained=meta.get("trained", False))
    return model.infer()
