# pylint: disable=c-extension-no-member, too-few-public-methods
from dependency_injector import containers, providers

from sqp.dependency_injection.config import as_dict, get_config
from sqp.dependency_injection.services import Services


class Container(containers.DeclarativeContainer):
    config = providers.Configuration()

    services = providers.Container(Services, config=config)


def create_container(path=None) -> Container:
    container = Container()
    container.config.from_dict(as_dict(get_config(path)))
    return container
