from django.test import TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from filemigration.constants import migration_constants
from filemigration.models import ExperimentReport


class ExperimentAPITests(TestCase):

    def setUp(self):
        self.client = APIClient()

    def post(self, name, payload=None):
        return self.client.post(reverse(name), payload or {}, format='json')

    def assertEnvelope(self, response, code):
        self.assertEqual(response.status_code, code)
        body = response.json()
        self.assertEqual(body['code'], code)
        self.assertEqual(body['status'], 'success' if code == 200 else 'error')
        self.assertEqual(len(body['meta']['request_id']), 12)
        return body

    def test_constants(self):
        body = self.assertEnvelope(self.post('constants'), status.HTTP_200_OK)
        rows = {row['name']: row['value'] for row in body['data']['result']['constants']}
        self.assertAlmostEqual(rows['R0'], migration_constants().R0)
        self.assertTrue(body['data']['report_id'].startswith('EXP-'))

    def test_simulate_inline_instance(self):
        payload = {
            'alg': 'stay',
            'instance': {'D': 4, 'dist': [[0, 1], [1, 0]], 'start': 0, 'requests': [1, 1, 1]},
        }
        body = self.assertEnvelope(self.post('simulate', payload), status.HTTP_200_OK)
        report = body['data']['result']['report']
        self.assertEqual(report['total_alg'], 3.0)
        self.assertEqual(report['total_opt'], 3.0)
        self.assertEqual(report['ratio'], 1.0)
        self.assertEqual(body['data']['config']['instance']['requests'], [1, 1, 1])
        self.assertEqual(body['data']['exit_code'], 0)

    def test_simulate_generated_dlm(self):
        payload = {'alg': 'dlm', 'gen': 'random', 'params': {'n': 4, 'D': 8, 'T': 80}, 'seed': 2}
        body = self.assertEnvelope(self.post('simulate', payload), status.HTTP_200_OK)
        self.assertTrue(body['data']['result']['report']['passed'])
        self.assertEqual(len(body['data']['result']['ledger']), 1)

    def test_simulate_validation_errors(self):
        body = self.assertEnvelope(self.post('simulate', {'alg': 'greedy', 'gen': 'random'}),
                                   status.HTTP_400_BAD_REQUEST)
        self.assertIn('alg', [error['field'] for error in body['errors']])

        body = self.assertEnvelope(self.post('simulate', {'alg': 'dlm'}), status.HTTP_400_BAD_REQUEST)
        self.assertEqual(body['errors'][0]['field'], 'non_field_errors')

        payload = {'alg': 'dlm', 'instance': {'D': 4, 'dist': [[0, 1], [1, 0]], 'start': 0, 'requests': [2]}}
        self.assertEnvelope(self.post('simulate', payload), status.HTTP_400_BAD_REQUEST)

    def test_simulate_domain_error(self):
        payload = {'alg': 'dlm', 'gen': 'random', 'params': {'n': 3, 'D': 6, 'T': 20}}
        body = self.assertEnvelope(self.post('simulate', payload), status.HTTP_422_UNPROCESSABLE_ENTITY)
        self.assertEqual(body['errors'][0]['field'], 'PhaseError')
        self.assertFalse(ExperimentReport.objects.exists())

    def test_lp(self):
        body = self.assertEnvelope(self.post('lp', {'model': 'mtlm'}), status.HTTP_200_OK)
        solution = body['data']['result']['solution']
        self.assertEqual(solution['status'], 'optimal')
        self.assertAlmostEqual(solution['objective_value'], migration_constants().R0, delta=1e-6)
        self.assertIn('witness', body['data']['result'])

    def test_lowerbound_non_competitive(self):
        payload = {'policy': 'stay', 'L': 3, 'k': 3, 'D': 40, 'epochs': 1, 'max_phases': 5}
        body = self.assertEnvelope(self.post('lowerbound', payload), status.HTTP_422_UNPROCESSABLE_ENTITY)
        self.assertEqual(body['data']['result']['phases'], 5)
        self.assertEqual(body['errors'][0]['field'], 'NonCompetitivePolicyError')

    def test_lowerbound_mtlm(self):
        payload = {'L': 4, 'k': 5, 'D': 40, 'epochs': 2}
        body = self.assertEnvelope(self.post('lowerbound', payload), status.HTTP_200_OK)
        result = body['data']['result']
        self.assertEqual(result['bound_violations'], 0)
        self.assertGreaterEqual(result['ratio'], result['threshold'] - 0.01)

    def test_report_listing(self):
        self.post('constants')
        self.post('lp', {'model': 'mtlm'})
        body = self.assertEnvelope(self.post('reports'), status.HTTP_200_OK)
        self.assertEqual(body['data']['total_count'], 2)

        body = self.assertEnvelope(self.post('reports', {'command': 'lp'}), status.HTTP_200_OK)
        self.assertEqual(body['data']['total_count'], 1)
        report = body['data']['reports'][0]
        self.assertEqual(report['command'], 'lp')
        self.assertTrue(report['passed'])

        ids = sorted(r.report_id for r in ExperimentReport.objects.all())
        self.assertEqual([i[-3:] for i in ids], ['001', '002'])

        self.assertEnvelope(self.post('reports', {'command': 'teach'}), status.HTTP_400_BAD_REQUEST)
