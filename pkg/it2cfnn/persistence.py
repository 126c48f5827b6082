"""
Model files.

A network is stored as a self-describing JSON document (the :py:class:`it2cfnn.network.Network`
model dump). Files with the ``.xml`` suffix use an equivalent xml document instead.
Floats are written in the shortest form that parses back to the same binary value.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import pydantic as pd
import pydantic_xml as pxml
from pydantic_xml import BaseXmlModel, attr, element

from . import errors
from .data import Normalization
from .network import MODEL_VERSION, Network, Rule
from .typedefs import NormalizationMode

__all__ = (
    'save_model',
    'load_model',
    'dump_model',
    'parse_model',
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class RowXml(BaseXmlModel, tag='row'):
    values: List[float] = element(tag='g')


class RuleXml(BaseXmlModel, tag='rule'):
    v1: float = attr()
    v2: float = attr()
    consequent: float = attr()
    center: List[float] = element(tag='m')
    transform: List[RowXml] = element(tag='row')
    beta: List[float] = element(tag='beta')
    delta: List[float] = element(tag='delta')


class NormalizationXml(BaseXmlModel, tag='normalization'):
    mode: NormalizationMode = attr()
    target_offset: float = attr(name='target-offset')
    target_scale: float = attr(name='target-scale')
    input_offset: List[float] = element(tag='offset')
    input_scale: List[float] = element(tag='scale')


class NetworkXml(BaseXmlModel, tag='network'):
    version: str = attr()
    n: int = attr()
    R: int = attr()
    normalized_output: bool = attr(name='normalized-output')
    rules: List[RuleXml] = element(tag='rule')
    normalization: Optional[NormalizationXml] = element(tag='normalization', default=None)

    @classmethod
    def from_network(cls, net: Network) -> 'NetworkXml':
        normalization = None
        if net.normalization is not None:
            normalization = NormalizationXml(
                mode=net.normalization.mode,
                target_offset=net.normalization.target_offset,
                target_scale=net.normalization.target_scale,
                input_offset=list(net.normalization.input_offset),
                input_scale=list(net.normalization.input_scale),
            )

        return cls(
            version=net.version,
            n=net.n,
            R=net.R,
            normalized_output=net.normalized_output,
            rules=[
                RuleXml(
                    v1=rule.v1,
                    v2=rule.v2,
                    consequent=rule.consequent,
                    center=list(rule.center),
                    transform=[RowXml(values=list(row)) for row in rule.transform],
                    beta=list(rule.beta),
                    delta=list(rule.delta),
                )
                for rule in net.rules
            ],
            normalization=normalization,
        )

    def to_network(self) -> Network:
        normalization = None
        if self.normalization is not None:
            normalization = Normalization(
                mode=self.normalization.mode,
                input_offset=tuple(self.normalization.input_offset),
                input_scale=tuple(self.normalization.input_scale),
                target_offset=self.normalization.target_offset,
                target_scale=self.normalization.target_scale,
            )

        return Network.model_validate(
            dict(
                version=self.version,
                n=self.n,
                R=self.R,
                normalized_output=self.normalized_output,
                rules=[
                    Rule(
                        center=tuple(rule.center),
                        transform=tuple(tuple(row.values) for row in rule.transform),
                        beta=tuple(rule.beta),
                        delta=tuple(rule.delta),
                        v1=rule.v1,
                        v2=rule.v2,
                        consequent=rule.consequent,
                    )
                    for rule in self.rules
                ],
                normalization=normalization,
            ),
        )


def _is_xml(path: PathLike) -> bool:
    return Path(path).suffix.lower() == '.xml'


def _describe(exc: pd.ValidationError) -> str:
    for error in exc.errors():
        if error['loc'] and error['loc'][0] == 'version':
            return f"unsupported model version {error.get('input')!r} (expected {MODEL_VERSION!r})"

    first = exc.errors()[0]
    location = '.'.join(str(part) for part in first['loc']) or 'document'
    return f"{location}: {first['msg']}"


def dump_model(net: Network, xml: bool = False) -> str:
    """
    Serializes a network to a model document.

    :param net: network
    :param xml: produce an xml document instead of json
    :return: document text
    """

    if xml:
        document = NetworkXml.from_network(net).to_xml(encoding='unicode')
        assert isinstance(document, str)
        return document

    return net.model_dump_json(indent=2)


def parse_model(document: Union[str, bytes], xml: bool = False, source: str = '<string>') -> Network:
    """
    Deserializes a network from a model document.

    :param document: document text
    :param xml: the document is xml
    :param source: document origin used in error messages
    :return: network
    """

    try:
        if xml:
            return NetworkXml.from_xml(document).to_network()

        return Network.model_validate_json(document)
    except pd.ValidationError as exc:
        raise errors.PersistenceError(f"{source}: malformed model: {_describe(exc)}") from exc
    except (pxml.errors.BaseError, SyntaxError, ValueError) as exc:
        raise errors.PersistenceError(f"{source}: malformed model: {exc}") from exc


def save_model(net: Network, path: PathLike) -> None:
    """
    Saves a network. The format is chosen by the file suffix.

    :param net: network
    :param path: file path
    """

    Path(path).write_text(dump_model(net, xml=_is_xml(path)) + '\n', encoding='utf-8')
    logger.info("model with %d rules saved to %s", net.R, path)


def load_model(path: PathLike) -> Network:
    """
    Loads a network. The format is chosen by the file suffix.

    :param path: file path
    :return: network
    """

    try:
        document = Path(path).read_bytes()
    except OSError as exc:
        raise errors.PersistenceError(f"{path}: cannot read model: {exc.strerror}") from exc

    return parse_model(document, xml=_is_xml(path), source=str(path))
