"""
Jerarquía de excepciones del proyecto.
Todas heredan de RecError para que el CLI pueda capturarlas en un solo punto.
"""

from typing import Optional


class RecError(Exception):
    """Error base del recomendador."""


class ConfigurationError(RecError, ValueError):
    """Configuración inválida (claves desconocidas, valores fuera de rango, etc.)."""


class DataFormatError(RecError, ValueError):
    """Línea mal formada en un archivo de interacciones o de cabecera."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"línea {line_number}: {message}"
        super().__init__(message)


class VocabularyError(RecError, ValueError):
    """Identificador de ítem o comportamiento fuera del vocabulario declarado."""


class EmptyDatasetError(RecError, ValueError):
    """El conjunto de datos no contiene interacciones."""


class UsageError(RecError, ValueError):
    """Llamada con argumentos que violan el contrato de la operación."""


class CheckpointError(RecError, RuntimeError):
    """Checkpoint ausente, incompleto o incompatible con la configuración."""


class TrainingDivergedError(RecError, RuntimeError):
    """La pérdida de entrenamiento dejó de ser finita."""
