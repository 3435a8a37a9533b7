"""
Tests for the response envelope and the API exception handler.
"""
from unittest import mock

import numpy as np
from django.http import Http404
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from apps.shared.exceptions import ContractViolation, NumericalError, PowerFlowError
from apps.shared.exceptions.handler import custom_exception_handler
from apps.shared.utils.custom_response import CustomResponse


@mock.patch('apps.shared.exceptions.handler.alert_to_telegram')
class ExceptionHandlerTest(SimpleTestCase):
    def handle(self, exc):
        return custom_exception_handler(exc, {'request': None})

    def test_power_flow_error_carries_solver_state(self, alert):
        response = self.handle(PowerFlowError("Sweep diverged", iterations=12, mismatch=float('inf'), network='case33'))
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.data['id'], 'POWER_FLOW_ERROR')
        self.assertEqual(response.data['errors']['detail'], 'Sweep diverged')
        self.assertEqual(response.data['errors']['context'],
                         {'iterations': 12, 'mismatch': None, 'network': 'case33'})
        alert.assert_called_once()

    def test_contract_violation_is_a_validation_error(self, alert):
        response = self.handle(ContractViolation("Box bounds differ in shape", low=np.array([1.0, 2.0])))
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.data['errors']['context'], {'low': [1.0, 2.0]})

    def test_numerical_error_diagnostics(self, alert):
        response = self.handle(NumericalError("nan critic loss", diagnostics={'step': 7}))
        self.assertEqual(response.status_code, 500)
        self.assertEqual(response.data['id'], 'NUMERICAL_ERROR')
        self.assertEqual(response.data['errors']['context'], {'step': 7})

    def test_drf_validation_error(self, alert):
        response = self.handle(ValidationError({'seed': ['Not an integer']}))
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.data['id'], 'VALIDATION_ERROR')

    def test_not_found(self, alert):
        response = self.handle(Http404())
        self.assertEqual((response.status_code, response.data['id']), (404, 'NOT_FOUND'))

    def test_unexpected_error(self, alert):
        response = self.handle(RuntimeError('boom'))
        self.assertEqual(response.status_code, 500)
        self.assertEqual(response.data['id'], 'INTERNAL_SERVER_ERROR')
        self.assertNotIn('errors', response.data)


class CustomResponseTest(SimpleTestCase):
    def test_success_envelope(self):
        response = CustomResponse.success(data={'modes': ['sac']})
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data, {'id': 'SUCCESS', 'message': 'Success', 'data': {'modes': ['sac']}})

    def test_unknown_key_falls_back_to_internal_error(self):
        response = CustomResponse.error('NO_SUCH_KEY')
        self.assertEqual((response.status_code, response.data['id']), (500, 'INTERNAL_SERVER_ERROR'))
